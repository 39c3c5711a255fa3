//! Stark-shift corrected gates: joint numerical calibration of the waiting
//! time `t_w` and the detuning `Δ` against full-model infidelity.
//!
//! Each candidate `Δ` re-derives the device (`ω_b = ω_a + α_a + Δ`) and
//! re-synthesizes the ramp with `α_eff = α_a + Δ`; the shape of the control
//! changes with `Δ`, not just the Hamiltonian. For a fixed `Δ` the two ramp
//! propagators and the hold eigensystem are independent of `t_w`, so they
//! are cached and any `t_w` is scored from
//! `U(T_g) = U_down · V e^{-iE t_w} V† · U_up` at negligible cost.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::device::{CoupledOperator, DeviceSpec};
use crate::error::{Error, Result};
use crate::gate::{outcome_from_ucomp, simulate_gate, GateModel, GateOutcome};
use crate::operators::eig_real_symmetric;
use crate::propagation::{evolve_columns, PropagationConfig};
use crate::pulse::{
    build_schedule, faquad_ramp, invariant_ansatz, invariant_ramp, waiting_time, ControlSchedule,
    ProtocolKind, RampDirection, RampWaveform,
};
use crate::quadrature;
use crate::units;

/// Waiting-time search window around the analytic seed.
const T_WAIT_WINDOW: (f64, f64) = (0.5, 1.5);
/// Detuning bound, rad/ns (2π×5 MHz).
fn delta_bound() -> f64 {
    units::mhz(5.0)
}

/// A corrected-gate calibration problem for one ramp time.
#[derive(Clone)]
pub struct OptimizationProblem<'a> {
    /// Base device calibrated at the bare resonance (Δ ≈ 0).
    pub device: &'a DeviceSpec,
    pub protocol: ProtocolKind,
    pub t_ramp: f64,
    pub cfg: PropagationConfig,
    /// Evaluation budget; past it the best point is returned flagged
    /// non-converged.
    pub max_evaluations: usize,
}

impl<'a> OptimizationProblem<'a> {
    pub fn new(device: &'a DeviceSpec, protocol: ProtocolKind, t_ramp: f64, cfg: PropagationConfig) -> Self {
        Self { device, protocol, t_ramp, cfg, max_evaluations: 500 }
    }
}

/// Result of a corrected-gate calibration.
#[derive(Debug, Clone)]
pub struct OptimizationOutcome {
    pub t_wait: f64,
    pub delta: f64,
    /// Full-model infidelity re-simulated at the optimum.
    pub infidelity: f64,
    pub outcome: GateOutcome,
    pub t_wait_seed: f64,
    pub delta_seed: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Synthesizes the switch-on ramp of the chosen protocol.
pub fn synthesize_ramp(
    protocol: ProtocolKind,
    alpha_eff: f64,
    j1_target: f64,
    t_ramp: f64,
) -> Result<RampWaveform> {
    match protocol {
        ProtocolKind::Faquad => faquad_ramp(alpha_eff, j1_target, t_ramp),
        ProtocolKind::Invariant => {
            invariant_ramp(invariant_ansatz(alpha_eff, j1_target, t_ramp, RampDirection::Up)?)
        }
    }
}

/// The uncorrected schedule for a device: protocol ramp to `J̃₁ = r₁ J_M`
/// plus the analytic waiting time.
pub fn build_protocol_schedule(
    device: &DeviceSpec,
    protocol: ProtocolKind,
    t_ramp: f64,
) -> Result<ControlSchedule> {
    let dressed = device.dressed();
    let ramp = synthesize_ramp(protocol, device.alpha_eff(), dressed.r1 * device.j_max(), t_ramp)?;
    let t_wait = waiting_time(&ramp, &dressed)?;
    build_schedule(ramp, t_wait, &dressed)
}

/// Schedule-averaged Stark shift `δΩ̄` of the `|11⟩` state,
/// `(1/T_g) ∫ δΩ(J̃₂(t), J̃₃(t)) dt`.
pub fn mean_stark_shift(device: &DeviceSpec, schedule: &ControlSchedule) -> Result<f64> {
    let d = device.dressed();
    let s1 = device.alpha_sum() + device.delta();
    let s2 = device.alpha_sum() + 2.0 * device.delta();
    // the denominator J̃₃² − s₁s₂ is monotone in J̃₃ and farthest from zero
    // at J = 0; checking it at the hold coupling covers the whole schedule
    let j3_hold = d.r3 * schedule.j_hold();
    let den_hold = j3_hold * j3_hold - s1 * s2;
    if den_hold.abs() < 1e-6 || den_hold.signum() != (-s1 * s2).signum() {
        return Err(Error::SwResonance { denominator: den_hold });
    }
    let stark = |j: f64| {
        let j2 = d.r2 * j;
        let j3 = d.r3 * j;
        j2 * j2 * s2 / (j3 * j3 - s1 * s2)
    };
    let t_ramp = schedule.t_ramp();
    let ramp_part = quadrature::integrate(|t| stark(schedule.j(t)), 0.0, t_ramp, 1e-12);
    let hold_part = schedule.t_wait() * stark(schedule.j_hold());
    Ok((2.0 * ramp_part + hold_part) / schedule.t_gate())
}

/// Analytic seeds for the corrected gate: the waiting time from the ramp
/// area and the schedule-averaged Stark shift as the detuning guess.
pub fn seed_correction(device: &DeviceSpec, schedule: &ControlSchedule) -> Result<(f64, f64)> {
    let t_wait = waiting_time(schedule.ramp(), &device.dressed())?;
    let delta = mean_stark_shift(device, schedule)?;
    Ok((t_wait, delta))
}

/// Ramp propagators and hold eigensystem for one candidate detuning.
struct DeltaResponse {
    /// `V† U_up e_s` for the four computational columns.
    u_tilde: DMatrix<Complex64>,
    /// `V† U_down† e_s`.
    w_tilde: DMatrix<Complex64>,
    /// Hold eigenvalues `E_k`.
    evals: DVector<f64>,
}

struct Objective<'a> {
    problem: &'a OptimizationProblem<'a>,
    cache: RefCell<HashMap<u64, Rc<DeltaResponse>>>,
    evaluations: RefCell<usize>,
}

impl<'a> Objective<'a> {
    fn new(problem: &'a OptimizationProblem<'a>) -> Self {
        Self { problem, cache: RefCell::new(HashMap::new()), evaluations: RefCell::new(0) }
    }

    fn response(&self, delta: f64) -> Result<Rc<DeltaResponse>> {
        if let Some(r) = self.cache.borrow().get(&delta.to_bits()) {
            return Ok(r.clone());
        }
        let p = self.problem;
        let device = p.device.with_detuning(delta)?;
        let dressed = device.dressed();
        let ramp = synthesize_ramp(p.protocol, device.alpha_eff(), dressed.r1 * device.j_max(), p.t_ramp)?;
        let op = CoupledOperator::new(&device);
        let dim = op.dim();
        let comp = op.computational_indices();
        let mut cols = DMatrix::zeros(dim, 4);
        for (c, &idx) in comp.iter().enumerate() {
            cols[(idx, c)] = Complex64::new(1.0, 0.0);
        }
        let t_ramp = p.t_ramp;
        let r1 = dressed.r1;
        let up = op.driven(|t| ramp.value(t) / r1);
        let u_cols = evolve_columns(&up, cols.clone(), 0.0, t_ramp, &p.cfg)
            .map_err(|e| e.in_context("calibration switch-on ramp"))?;
        // switch-off in local time σ: H(J(T−σ)); integrating backwards from
        // σ = T yields U_down† on each basis column
        let down = op.driven(|t| ramp.value(t_ramp - t) / r1);
        let w_cols = evolve_columns(&down, cols, t_ramp, 0.0, &p.cfg)
            .map_err(|e| e.in_context("calibration switch-off ramp"))?;
        let hold = op.real_matrix(ramp.value(t_ramp) / r1);
        let (evals, vecs) = eig_real_symmetric(&hold);
        let vecs_c = vecs.map(|x| Complex64::new(x, 0.0));
        let response = Rc::new(DeltaResponse {
            u_tilde: vecs_c.adjoint() * u_cols,
            w_tilde: vecs_c.adjoint() * w_cols,
            evals,
        });
        self.cache.borrow_mut().insert(delta.to_bits(), response.clone());
        Ok(response)
    }

    fn u_comp(&self, t_wait: f64, delta: f64) -> Result<DMatrix<Complex64>> {
        let r = self.response(delta)?;
        let dim = r.evals.len();
        let phases: Vec<Complex64> =
            (0..dim).map(|k| Complex64::from_polar(1.0, -r.evals[k] * t_wait)).collect();
        let mut u = DMatrix::zeros(4, 4);
        for row in 0..4 {
            for col in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += r.w_tilde[(k, row)].conj() * phases[k] * r.u_tilde[(k, col)];
                }
                u[(row, col)] = acc;
            }
        }
        Ok(u)
    }

    fn infidelity(&self, t_wait: f64, delta: f64) -> Result<f64> {
        *self.evaluations.borrow_mut() += 1;
        let u = self.u_comp(t_wait, delta)?;
        match outcome_from_ucomp(u) {
            Ok(out) => Ok(out.infidelity()),
            // a grossly off waiting time empties the diagonal; score it as
            // total infidelity instead of failing the search
            Err(Error::GrossPopulationTransfer { .. }) => Ok(1.0),
            Err(e) => Err(e),
        }
    }
}

/// Derivative-free simplex minimization of full-model infidelity over
/// `(t_w, Δ)` from the analytic seed. Deterministic given identical inputs.
///
/// The initial simplex spans the seed, a waiting-time offset, and the
/// uncorrected point `(t_w⁰, 0)`, so the result can never be worse than the
/// uncorrected gate. Convergence requires the objective spread below 1e-9
/// and the simplex within (1e-4 ns, 2π×1 kHz); past the evaluation budget
/// the best point is returned flagged as non-converged.
pub fn optimize_gate(problem: &OptimizationProblem) -> Result<OptimizationOutcome> {
    problem.cfg.validate()?;
    let base_schedule = build_protocol_schedule(problem.device, problem.protocol, problem.t_ramp)?;
    let (t_wait_seed, delta_seed) = seed_correction(problem.device, &base_schedule)?;
    let objective = Objective::new(problem);

    let bounds_ok = |x: &[f64; 2]| {
        x[0] >= T_WAIT_WINDOW.0 * t_wait_seed
            && x[0] <= T_WAIT_WINDOW.1 * t_wait_seed
            && x[1].abs() <= delta_bound()
    };
    let eval = |x: &[f64; 2]| -> Result<f64> {
        if !bounds_ok(x) {
            return Ok(f64::INFINITY);
        }
        objective.infidelity(x[0], x[1])
    };

    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for x in [
        [t_wait_seed, delta_seed],
        [t_wait_seed + 0.1, delta_seed],
        [t_wait_seed, 0.0],
    ] {
        let f = eval(&x)?;
        simplex.push((x, f));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while *objective.evaluations.borrow() < problem.max_evaluations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective is never NaN"));
        let spread = simplex[2].1 - simplex[0].1;
        let dt = simplex.iter().map(|(x, _)| (x[0] - simplex[0].0[0]).abs()).fold(0.0, f64::max);
        let dd = simplex.iter().map(|(x, _)| (x[1] - simplex[0].0[1]).abs()).fold(0.0, f64::max);
        if spread < 1e-9 && dt < 1e-4 && dd < units::ghz(1e-6) {
            converged = true;
            break;
        }

        let centroid = [
            (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
            (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
        ];
        let worst = simplex[2];
        let reflect = [
            centroid[0] + alpha * (centroid[0] - worst.0[0]),
            centroid[1] + alpha * (centroid[1] - worst.0[1]),
        ];
        let f_reflect = eval(&reflect)?;
        if f_reflect < simplex[0].1 {
            let expand = [
                centroid[0] + gamma * (reflect[0] - centroid[0]),
                centroid[1] + gamma * (reflect[1] - centroid[1]),
            ];
            let f_expand = eval(&expand)?;
            simplex[2] = if f_expand < f_reflect { (expand, f_expand) } else { (reflect, f_reflect) };
        } else if f_reflect < simplex[1].1 {
            simplex[2] = (reflect, f_reflect);
        } else {
            let better = if f_reflect < worst.1 { (reflect, f_reflect) } else { worst };
            let contract = [
                centroid[0] + rho * (better.0[0] - centroid[0]),
                centroid[1] + rho * (better.0[1] - centroid[1]),
            ];
            let f_contract = eval(&contract)?;
            if f_contract < better.1 {
                simplex[2] = (contract, f_contract);
            } else {
                // shrink toward the best vertex
                for i in 1..3 {
                    let x = [
                        simplex[0].0[0] + sigma * (simplex[i].0[0] - simplex[0].0[0]),
                        simplex[0].0[1] + sigma * (simplex[i].0[1] - simplex[0].0[1]),
                    ];
                    let f = eval(&x)?;
                    simplex[i] = (x, f);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective is never NaN"));
    let best = simplex[0];
    let evaluations = *objective.evaluations.borrow();

    // honest re-simulation of the winning point through the standard path
    let device = problem.device.with_detuning(best.0[1])?;
    let dressed = device.dressed();
    let ramp = synthesize_ramp(
        problem.protocol,
        device.alpha_eff(),
        dressed.r1 * device.j_max(),
        problem.t_ramp,
    )?;
    let schedule = build_schedule(ramp, best.0[0], &dressed)?;
    let outcome = simulate_gate(&device, &schedule, GateModel::Full, &problem.cfg)?;

    Ok(OptimizationOutcome {
        t_wait: best.0[0],
        delta: best.0[1],
        infidelity: outcome.infidelity(),
        outcome,
        t_wait_seed,
        delta_seed,
        evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceParams, DressedCouplings};
    use crate::units::{mhz, to_mhz};

    fn standard_device() -> DeviceSpec {
        DeviceSpec::calibrate(&DeviceParams::standard()).unwrap()
    }

    fn fast_cfg() -> PropagationConfig {
        PropagationConfig { abs_tol: 1e-9, rel_tol: 1e-9, ..Default::default() }
    }

    #[test]
    fn seed_matches_analytic_waiting_time() {
        let dev = standard_device();
        let sched = build_protocol_schedule(&dev, ProtocolKind::Invariant, 2.0).unwrap();
        let (t_w, _) = seed_correction(&dev, &sched).unwrap();
        assert_eq!(t_w, waiting_time(sched.ramp(), &dev.dressed()).unwrap());
        assert!((t_w - sched.t_wait()).abs() < 1e-12);
    }

    #[test]
    fn seed_detuning_tracks_mean_stark_shift() {
        // hold-dominated schedule: δΩ̄ lands in the sub-MHz range with the
        // sign of δΩ; with exact matrix-element couplings this comes out
        // around 2π×0.6 MHz (harmonic √2 couplings would give ≈ 0.75)
        let dev = standard_device();
        let sched = build_protocol_schedule(&dev, ProtocolKind::Invariant, 1.0).unwrap();
        let (_, delta0) = seed_correction(&dev, &sched).unwrap();
        assert!(delta0 > 0.0);
        let m = to_mhz(delta0);
        assert!((0.4..0.9).contains(&m), "Δ⁰ = 2π×{m} MHz");
    }

    #[test]
    fn zero_s3_leak_coupling_gives_zero_seed_detuning() {
        // hypothetical device with no |11⟩↔|02⟩ coupling: δΩ ≡ 0
        let dev = standard_device();
        let d = dev.dressed();
        let ramp = synthesize_ramp(ProtocolKind::Invariant, dev.alpha_eff(), d.r1 * dev.j_max(), 1.0).unwrap();
        let t_w = waiting_time(&ramp, &d).unwrap();
        let no_leak = DressedCouplings { r2: 0.0, ..d };
        let sched = build_schedule(ramp, t_w, &no_leak).unwrap();
        // mean_stark_shift reads couplings from the device, so emulate the
        // hypothetical by scaling: with r2 = 0 the integrand vanishes
        let s2 = dev.alpha_sum() + 2.0 * dev.delta();
        let stark = |j: f64| {
            let j2 = no_leak.r2 * j;
            let j3 = no_leak.r3 * j;
            j2 * j2 * s2 / (j3 * j3 - (dev.alpha_sum() + dev.delta()) * s2)
        };
        let v = crate::quadrature::integrate(|t| stark(sched.j(t)), 0.0, sched.t_gate(), 1e-12);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn cached_objective_matches_direct_simulation() {
        let dev = standard_device();
        let problem = OptimizationProblem::new(&dev, ProtocolKind::Invariant, 1.0, fast_cfg());
        let objective = Objective::new(&problem);
        let sched = build_protocol_schedule(&dev, ProtocolKind::Invariant, 1.0).unwrap();
        let t_w = sched.t_wait();
        let cached = objective.infidelity(t_w, dev.delta()).unwrap();
        let direct = simulate_gate(&dev, &sched, GateModel::Full, &problem.cfg).unwrap().infidelity();
        assert!(
            (cached - direct).abs() < 1e-8,
            "cached {cached:.6e} vs direct {direct:.6e}"
        );
    }

    #[test]
    fn optimizer_descends_and_respects_bounds() {
        let dev = standard_device();
        let mut problem = OptimizationProblem::new(&dev, ProtocolKind::Invariant, 1.0, fast_cfg());
        problem.max_evaluations = 60;
        let opt = optimize_gate(&problem).unwrap();
        let sched = build_protocol_schedule(&dev, ProtocolKind::Invariant, 1.0).unwrap();
        let uncorrected = simulate_gate(&dev, &sched, GateModel::Full, &problem.cfg)
            .unwrap()
            .infidelity();
        assert!(opt.infidelity <= uncorrected, "{} vs uncorrected {}", opt.infidelity, uncorrected);
        assert!(opt.t_wait >= 0.5 * opt.t_wait_seed && opt.t_wait <= 1.5 * opt.t_wait_seed);
        assert!(opt.delta.abs() <= mhz(5.0));
        assert!(opt.evaluations <= 60 + 2);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let dev = standard_device();
        let mut problem = OptimizationProblem::new(&dev, ProtocolKind::Faquad, 1.0, fast_cfg());
        problem.max_evaluations = 40;
        let a = optimize_gate(&problem).unwrap();
        let b = optimize_gate(&problem).unwrap();
        assert_eq!(a.t_wait.to_bits(), b.t_wait.to_bits());
        assert_eq!(a.delta.to_bits(), b.delta.to_bits());
        assert_eq!(a.infidelity.to_bits(), b.infidelity.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }
}
