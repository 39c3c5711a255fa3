//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H†| = {max_asymmetry:.3e} exceeds tolerance")]
    NonHermitian { max_asymmetry: f64 },

    #[error("adaptive step size underflow at t = {t} ns")]
    StepSizeUnderflow { t: f64 },

    #[error("transmon calibration did not converge in {iterations} iterations (residual {residual:.3e} rad/ns)")]
    CalibrationDiverged { iterations: usize, residual: f64 },

    #[error("charge cutoff {cutoff} too small for converged spectrum; need at least {required}")]
    CutoffTooSmall { cutoff: usize, required: usize },

    #[error("kept-level truncation not converged: six lowest coupled levels move by {sensitivity:.3e} rad/ns")]
    TruncationNotConverged { sensitivity: f64 },

    #[error("Schrieffer-Wolff reduction near resonance: denominator {denominator:.3e} (rad/ns)^2")]
    SwResonance { denominator: f64 },

    #[error("invariant ansatz infeasible: radicand {radicand:.3e} at t = {t} ns; increase the ramp time or the ansatz degree")]
    InfeasibleAnsatz { t: f64, radicand: f64 },

    #[error("negative waiting time {t_w} ns: ramp area exceeds the half-rotation budget")]
    NegativeWaitingTime { t_w: f64 },

    #[error("gross population transfer: |U[{index},{index}]| = {magnitude:.3e} too small for phase extraction")]
    GrossPopulationTransfer { index: usize, magnitude: f64 },

    #[error("invalid propagation configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("propagation failed during {context}: {source}")]
    Propagation {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap a propagation failure with schedule context.
    pub fn in_context(self, context: impl Into<String>) -> Error {
        Error::Propagation {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
