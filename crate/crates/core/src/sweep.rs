//! Ramp-time sweeps: uncorrected gates (analytic waiting time, zero
//! detuning) and Stark-shift corrected gates over a grid of ramp times,
//! with deterministic parallel execution and CSV export.

use rayon::prelude::*;

use crate::device::DeviceSpec;
use crate::error::Result;
use crate::gate::{simulate_gate, GateModel, GateOutcome};
use crate::optimize::{
    build_protocol_schedule, mean_stark_shift, optimize_gate, seed_correction, OptimizationProblem,
};
use crate::propagation::PropagationConfig;
use crate::pulse::ProtocolKind;
use crate::units::to_mhz;

/// Uncorrected gates use the analytic waiting time at zero detuning;
/// corrected gates run the `(t_w, Δ)` calibration per ramp time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Uncorrected,
    Corrected,
}

impl SweepMode {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMode::Uncorrected => "uncorrected",
            SweepMode::Corrected => "corrected",
        }
    }
}

impl std::str::FromStr for SweepMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uncorrected" => Ok(SweepMode::Uncorrected),
            "corrected" => Ok(SweepMode::Corrected),
            other => Err(format!("unknown mode '{other}' (expected uncorrected|corrected)")),
        }
    }
}

/// One sweep point, all panel quantities included.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub t_ramp: f64,
    pub t_wait: f64,
    /// Detuning actually used (0 for uncorrected sweeps).
    pub delta: f64,
    pub t_gate: f64,
    pub protocol: ProtocolKind,
    pub model: GateModel,
    pub infidelity: f64,
    pub phase_dev: f64,
    pub loss: [f64; 4],
    pub leakage: f64,
    /// Analytic detuning seed `δΩ̄`-based (also reported uncorrected).
    pub delta_seed: f64,
    /// Schedule-averaged Stark shift at the final operating point.
    pub stark_mean: f64,
    pub converged: bool,
}

/// A failed sweep point, kept so the sweep can continue.
#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub t_ramp: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    /// Successful rows, sorted by total gate time.
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// The default ramp-time grid, 1 to 8 ns in 0.5 ns steps.
pub fn default_ramp_times() -> Vec<f64> {
    (0..15).map(|k| 1.0 + 0.5 * k as f64).collect()
}

/// Runs one sweep row.
fn run_point(
    device: &DeviceSpec,
    protocol: ProtocolKind,
    t_ramp: f64,
    mode: SweepMode,
    cfg: &PropagationConfig,
) -> Result<SweepRow> {
    let base_schedule = build_protocol_schedule(device, protocol, t_ramp)?;
    let (_, delta_seed) = seed_correction(device, &base_schedule)?;
    let finish = |device: &DeviceSpec, t_wait: f64, delta: f64, out: &GateOutcome, converged: bool| -> Result<SweepRow> {
        let schedule = build_protocol_schedule(device, protocol, t_ramp)?;
        // average the Stark shift over the schedule actually run
        let operated = crate::pulse::build_schedule(schedule.ramp().clone(), t_wait, &device.dressed())?;
        let stark_mean = mean_stark_shift(device, &operated)?;
        Ok(SweepRow {
            t_ramp,
            t_wait,
            delta,
            t_gate: 2.0 * t_ramp + t_wait,
            protocol,
            model: GateModel::Full,
            infidelity: out.infidelity(),
            phase_dev: out.phase_dev,
            loss: out.loss,
            leakage: out.leakage,
            delta_seed,
            stark_mean,
            converged,
        })
    };
    match mode {
        SweepMode::Uncorrected => {
            let out = simulate_gate(device, &base_schedule, GateModel::Full, cfg)?;
            finish(device, base_schedule.t_wait(), device.delta(), &out, true)
        }
        SweepMode::Corrected => {
            let problem = OptimizationProblem::new(device, protocol, t_ramp, *cfg);
            let opt = optimize_gate(&problem)?;
            let device_opt = device.with_detuning(opt.delta)?;
            finish(&device_opt, opt.t_wait, opt.delta, &opt.outcome, opt.converged)
        }
    }
}

/// Sweeps the full-model gate over `t_ramps`, distributing rows over a
/// bounded worker pool. Row results are deterministic and independent of
/// the worker count; failures are recorded and the sweep continues.
pub fn sweep(
    device: &DeviceSpec,
    protocol: ProtocolKind,
    t_ramps: &[f64],
    mode: SweepMode,
    cfg: &PropagationConfig,
    workers: Option<usize>,
) -> SweepResult {
    let compute = || -> Vec<(f64, Result<SweepRow>)> {
        t_ramps
            .par_iter()
            .map(|&t_ramp| (t_ramp, run_point(device, protocol, t_ramp, mode, cfg)))
            .collect()
    };
    let outcomes = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("worker pool")
            .install(compute),
        None => compute(),
    };
    let mut result = SweepResult::default();
    for (t_ramp, outcome) in outcomes {
        match outcome {
            Ok(row) => result.rows.push(row),
            Err(e) => result.failures.push(SweepFailure { t_ramp, message: e.to_string() }),
        }
    }
    result.rows.sort_by(|a, b| a.t_gate.partial_cmp(&b.t_gate).expect("finite gate times"));
    result
}

/// Column header shared by the gate report and sweep CSVs.
pub const CSV_HEADER: &str = "T_ns,t_w_ns,Delta_over_2pi_MHz,Tg_ns,protocol,model,infidelity,\
phase_dev_rad,loss_00,loss_01,loss_10,loss_11,leakage,Delta_seed_over_2pi_MHz,\
stark_mean_over_2pi_MHz,converged";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{:.6},{:.9},{:.9e},{:.9},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.9e},{:.9e},{}",
            self.t_ramp,
            self.t_wait,
            to_mhz(self.delta),
            self.t_gate,
            self.protocol.name(),
            self.model.name(),
            self.infidelity,
            self.phase_dev,
            self.loss[0],
            self.loss[1],
            self.loss[2],
            self.loss[3],
            self.leakage,
            to_mhz(self.delta_seed),
            to_mhz(self.stark_mean),
            self.converged,
        )
    }
}

/// Renders a whole sweep as CSV (header plus one line per row).
pub fn to_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}
