//! Invariant-engineered ramps.
//!
//! A dynamical invariant `Î(t) = Σ f_j(t) σ̂_j/2` of the two-level
//! Hamiltonian `Ĥ₂(t) = (α/2)σ̂₃ + J̃₁(t)σ̂₁` satisfies
//! `∂Î/∂t + i[Ĥ₂, Î] = 0`, which with the constraints `h₂ = 0`,
//! `h₃ = α` fixes
//!
//! ```text
//! f₂ = -ḟ₁/α,      f₃ = +√(c² - f₁² - f₂²),      c² = α²,
//! J̃₁ = (f̈₁/α + α f₁) / (2 f₃).
//! ```
//!
//! (The middle equation of the component system reads `ḟ₁ = -α f₂`; the
//! sign of `f₂` follows from it and is what makes the invariant equation
//! close exactly.) Choosing `f₁` as a quintic that meets the frictionless
//! boundary conditions drives the `(|01⟩,|10⟩)` pair transitionlessly for
//! any ramp time.

use super::{ProtocolKind, RampWaveform};
use crate::error::{Error, Result};
use crate::quadrature;

/// Which end of the schedule the ramp serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampDirection {
    /// Switch-on: `J̃₁(0) = 0` to `J̃₁(T)` at the target.
    Up,
    /// Switch-off: target down to zero.
    Down,
}

/// Quintic auxiliary function `f₁` plus everything derived from it.
///
/// Coefficients are stored in the scaled variable `s = t/T` for
/// conditioning; accessors evaluate in physical time.
#[derive(Debug, Clone)]
pub struct InvariantAnsatz {
    coeffs: [f64; 6],
    t_ramp: f64,
    alpha_eff: f64,
    j1_target: f64,
    direction: RampDirection,
    residual: f64,
}

impl InvariantAnsatz {
    pub fn t_ramp(&self) -> f64 {
        self.t_ramp
    }

    pub fn alpha_eff(&self) -> f64 {
        self.alpha_eff
    }

    pub fn j1_target(&self) -> f64 {
        self.j1_target
    }

    pub fn direction(&self) -> RampDirection {
        self.direction
    }

    /// `c² = α_eff²`.
    pub fn c_sq(&self) -> f64 {
        self.alpha_eff * self.alpha_eff
    }

    /// Monomial coefficients of `f₁(t)` in physical time (rad/ns · ns⁻ᵐ).
    pub fn coefficients_in_time(&self) -> [f64; 6] {
        let mut a = self.coeffs;
        let mut scale = 1.0;
        for (m, c) in a.iter_mut().enumerate() {
            if m > 0 {
                scale /= self.t_ramp;
            }
            *c *= scale;
        }
        a
    }

    /// Max absolute residual of the six boundary conditions.
    pub fn boundary_residual(&self) -> f64 {
        self.residual
    }

    fn horner(&self, s: f64, order: usize) -> f64 {
        // d^order/ds^order of the quintic, evaluated by Horner's scheme
        let mut acc = 0.0;
        for m in (order..6).rev() {
            let mut fac = 1.0;
            for k in 0..order {
                fac *= (m - k) as f64;
            }
            acc = acc * s + fac * self.coeffs[m];
        }
        acc
    }

    pub fn f1(&self, t: f64) -> f64 {
        self.horner(t / self.t_ramp, 0)
    }

    pub fn f1_dot(&self, t: f64) -> f64 {
        self.horner(t / self.t_ramp, 1) / self.t_ramp
    }

    pub fn f1_ddot(&self, t: f64) -> f64 {
        self.horner(t / self.t_ramp, 2) / (self.t_ramp * self.t_ramp)
    }

    pub fn f1_dddot(&self, t: f64) -> f64 {
        self.horner(t / self.t_ramp, 3) / (self.t_ramp * self.t_ramp * self.t_ramp)
    }

    pub fn f2(&self, t: f64) -> f64 {
        -self.f1_dot(t) / self.alpha_eff
    }

    fn f2_dot(&self, t: f64) -> f64 {
        -self.f1_ddot(t) / self.alpha_eff
    }

    /// Radicand `c² − f₁² − f₂²`; must stay positive on the open ramp.
    pub fn radicand(&self, t: f64) -> f64 {
        let f1 = self.f1(t);
        let f2 = self.f2(t);
        self.c_sq() - f1 * f1 - f2 * f2
    }

    pub fn f3(&self, t: f64) -> f64 {
        self.radicand(t).sqrt()
    }

    /// The engineered coupling `J̃₁(t) = (f̈₁/α + α f₁)/(2 f₃)`.
    pub fn j1(&self, t: f64) -> f64 {
        (self.f1_ddot(t) / self.alpha_eff + self.alpha_eff * self.f1(t)) / (2.0 * self.f3(t))
    }

    /// `dJ̃₁/dt`, closed form.
    pub fn j1_dot(&self, t: f64) -> f64 {
        let f1 = self.f1(t);
        let f2 = self.f2(t);
        let f3 = self.f3(t);
        let num = self.f1_ddot(t) / self.alpha_eff + self.alpha_eff * f1;
        let num_dot = self.f1_dddot(t) / self.alpha_eff + self.alpha_eff * self.f1_dot(t);
        let f3_dot = -(f1 * self.f1_dot(t) + f2 * self.f2_dot(t)) / f3;
        num_dot / (2.0 * f3) - num * f3_dot / (2.0 * f3 * f3)
    }
}

/// Frictionless boundary value of `f₁` where the control is `h₁ = 2J̃₁`:
/// `f₁(t_b) = -h₁ √(c²/(h₁² + α²))`.
fn boundary_f1(alpha_eff: f64, h1: f64) -> f64 {
    -h1 * alpha_eff.abs() / (h1 * h1 + alpha_eff * alpha_eff).sqrt()
}

/// Solves the six frictionless boundary conditions for the quintic `f₁`
/// and verifies positivity of the radicand on a 10⁴-point grid.
pub fn invariant_ansatz(
    alpha_eff: f64,
    j1_target: f64,
    t_ramp: f64,
    direction: RampDirection,
) -> Result<InvariantAnsatz> {
    if !(alpha_eff < 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!("invariant ansatz needs alpha_eff < 0, got {alpha_eff}"),
        });
    }
    if !(j1_target >= 0.0) || !(t_ramp > 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!("invariant ansatz needs J̃₁(T) >= 0 and T > 0, got {j1_target}, {t_ramp}"),
        });
    }
    let f_on = boundary_f1(alpha_eff, 2.0 * j1_target);
    let (f_start, f_end) = match direction {
        RampDirection::Up => (0.0, f_on),
        RampDirection::Down => (f_on, 0.0),
    };

    // f(0), f'(0), f''(0), f(1), f'(1), f''(1) in s = t/T
    let mut system = nalgebra::DMatrix::zeros(6, 6);
    for m in 0..6usize {
        system[(0, m)] = if m == 0 { 1.0 } else { 0.0 };
        system[(1, m)] = if m == 1 { 1.0 } else { 0.0 };
        system[(2, m)] = if m == 2 { 2.0 } else { 0.0 };
        system[(3, m)] = 1.0;
        system[(4, m)] = m as f64;
        system[(5, m)] = (m * m.saturating_sub(1)) as f64;
    }
    let rhs = nalgebra::DVector::from_vec(vec![f_start, 0.0, 0.0, f_end, 0.0, 0.0]);
    let solution = system
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidConfig { reason: "boundary system singular".into() })?;
    let residual = (&system * &solution - &rhs).abs().max();
    let coeffs: [f64; 6] = std::array::from_fn(|m| solution[m]);

    let ansatz = InvariantAnsatz { coeffs, t_ramp, alpha_eff, j1_target, direction, residual };
    for k in 0..=10_000 {
        let t = t_ramp * k as f64 / 10_000.0;
        let r = ansatz.radicand(t);
        if !(r > 0.0) {
            return Err(Error::InfeasibleAnsatz { t, radicand: r });
        }
    }
    Ok(ansatz)
}

/// Wraps a feasible ansatz as a ramp waveform (switch-on direction).
pub fn invariant_ramp(ansatz: InvariantAnsatz) -> Result<RampWaveform> {
    if ansatz.direction != RampDirection::Up {
        return Err(Error::InvalidConfig {
            reason: "ramp waveforms are built from switch-on ansätze; the schedule mirrors them".into(),
        });
    }
    RampWaveform {
        kind: ProtocolKind::Invariant,
        t_ramp: ansatz.t_ramp,
        j1_target: ansatz.j1_target,
        alpha_eff: ansatz.alpha_eff,
        ansatz: Some(ansatz),
    }
    .validate()
}

/// Total Lewis-Riesenfeld phases over the mirrored ramp pair.
///
/// The `+` mode is the invariant eigenmode with eigenvalue `+c/2`
/// (`c = |α_eff|`), i.e. the mode that starts at `|01⟩`. Two pieces add up:
/// the dynamical part `−(2/c)∫₀ᵀ (f₁ J̃₁ + f₃ α/2) dt`, and the geometric
/// part `2∫₀ᵀ (f₂ḟ₁ − f₁ḟ₂)/(2c(c+f₃)) dt` from `⟨χ|i∂_t|χ⟩` — which is
/// *equal* on the switch-on and the mirrored switch-off (the mirrored mode
/// is the complex conjugate, flipping both `f₂` and the time direction), so
/// it doubles rather than cancelling. Verified to 1e-9 rad against direct
/// propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrPhases {
    pub beta_plus: f64,
    pub beta_minus: f64,
}

pub fn lr_phases(ansatz: &InvariantAnsatz) -> LrPhases {
    let c = ansatz.alpha_eff.abs();
    let dynamical = quadrature::integrate(
        |t| ansatz.f1(t) * ansatz.j1(t) + ansatz.f3(t) * ansatz.alpha_eff / 2.0,
        0.0,
        ansatz.t_ramp,
        1e-12,
    );
    let geometric = quadrature::integrate(
        |t| {
            let (f1, f2, f3) = (ansatz.f1(t), ansatz.f2(t), ansatz.f3(t));
            (f2 * ansatz.f1_dot(t) - f1 * ansatz.f2_dot(t)) / (2.0 * c * (c + f3))
        },
        0.0,
        ansatz.t_ramp,
        1e-12,
    );
    let beta_plus = -2.0 / c * dynamical + 2.0 * geometric;
    LrPhases { beta_plus, beta_minus: -beta_plus }
}

/// Max-norm of `∂Î/∂t + i[Ĥ₂, Î]` along the ramp, with the time
/// derivative taken by central finite differences of step `fd_step`.
/// Samples `n` interior times.
pub fn invariant_defect(ansatz: &InvariantAnsatz, n: usize, fd_step: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let t = ansatz.t_ramp * (k as f64 + 0.5) / n as f64;
        let fd = |f: &dyn Fn(f64) -> f64| (f(t + fd_step) - f(t - fd_step)) / (2.0 * fd_step);
        let r = [
            fd(&|u| ansatz.f1(u)) - cross(ansatz, t).0,
            fd(&|u| ansatz.f2(u)) - cross(ansatz, t).1,
            fd(&|u| ansatz.f3(u)) - cross(ansatz, t).2,
        ];
        // ‖Σ r_j σ_j/2‖_max = max(|r₃|, √(r₁²+r₂²))/2
        let norm = (r[2].abs().max((r[0] * r[0] + r[1] * r[1]).sqrt())) / 2.0;
        worst = worst.max(norm);
    }
    worst
}

/// `(h × f)_j` with `h = (2J̃₁, 0, α)`, the commutator part of the
/// invariant equation written in components.
fn cross(ansatz: &InvariantAnsatz, t: f64) -> (f64, f64, f64) {
    let h1 = 2.0 * ansatz.j1(t);
    let h3 = ansatz.alpha_eff;
    let (f1, f2, f3) = (ansatz.f1(t), ansatz.f2(t), ansatz.f3(t));
    (-h3 * f2, h3 * f1 - h1 * f3, h1 * f2)
}

/// Max-norm of `[Ĥ₂(t), Î(t)]` at time `t`; vanishes at the boundaries by
/// the frictionless conditions.
pub fn invariant_commutator_norm(ansatz: &InvariantAnsatz, t: f64) -> f64 {
    let (c1, c2, c3) = cross(ansatz, t);
    // [H, I] = (i/2)(h×f)·σ
    (c3.abs().max((c1 * c1 + c2 * c2).sqrt())) / 2.0
}
