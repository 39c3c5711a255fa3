//! Coupling-waveform synthesis: FAQUAD and invariant-engineered ramps, the
//! symmetric on/hold/off schedule, the analytic waiting time, and
//! Lewis-Riesenfeld phases.
//!
//! Ramps are designed on the two-level `(|01⟩, |10⟩)` subspace whose
//! traceless Hamiltonian is `(α_eff/2)σ₃ + J̃₁(t)σ₁` with
//! `α_eff = α_a + Δ`. A single physical control `J(t) = J̃₁(t)/r₁` then
//! drives every subspace, with `J̃₂ = r₂·J` and `J̃₃ = r₃·J`.

mod faquad;
mod invariant;
mod schedule;

pub use faquad::{faquad_mu, faquad_ramp};
pub use invariant::{
    invariant_ansatz, invariant_commutator_norm, invariant_defect, invariant_ramp, lr_phases,
    InvariantAnsatz, LrPhases, RampDirection,
};
pub use schedule::{build_schedule, waiting_time, ControlSchedule};

use crate::error::{Error, Result};

/// Ramp design family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Faquad,
    Invariant,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Faquad => "faquad",
            ProtocolKind::Invariant => "invariant",
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "faquad" => Ok(ProtocolKind::Faquad),
            "invariant" => Ok(ProtocolKind::Invariant),
            other => Err(format!("unknown protocol '{other}' (expected faquad|invariant)")),
        }
    }
}

/// A switch-on ramp `J̃₁(t)` on `t ∈ [0, T]` with `J̃₁(0) = 0` and
/// `J̃₁(T)` at the target.
#[derive(Debug, Clone)]
pub struct RampWaveform {
    kind: ProtocolKind,
    t_ramp: f64,
    j1_target: f64,
    alpha_eff: f64,
    ansatz: Option<InvariantAnsatz>,
}

impl RampWaveform {
    fn validate(self) -> Result<Self> {
        let tol = 1e-10 * self.j1_target.abs().max(1e-300);
        let start = self.value(0.0);
        let end = self.value(self.t_ramp);
        if start.abs() > tol.max(1e-14) {
            return Err(Error::InvalidConfig {
                reason: format!("ramp does not start at zero: J̃₁(0) = {start}"),
            });
        }
        if (end - self.j1_target).abs() > tol {
            return Err(Error::InvalidConfig {
                reason: format!("ramp misses its target: J̃₁(T) = {end} vs {}", self.j1_target),
            });
        }
        for k in 0..=10_000 {
            let t = self.t_ramp * k as f64 / 10_000.0;
            let v = self.value(t);
            if !v.is_finite() {
                return Err(Error::InvalidConfig {
                    reason: format!("ramp not finite at t = {t} ns"),
                });
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    /// Ramp duration `T` in ns.
    pub fn t_ramp(&self) -> f64 {
        self.t_ramp
    }

    /// `J̃₁(T)` in rad/ns.
    pub fn j1_target(&self) -> f64 {
        self.j1_target
    }

    /// Effective two-level splitting `α_a + Δ` the ramp was designed for.
    pub fn alpha_eff(&self) -> f64 {
        self.alpha_eff
    }

    pub fn ansatz(&self) -> Option<&InvariantAnsatz> {
        self.ansatz.as_ref()
    }

    /// `J̃₁(t)` for `t ∈ [0, T]`.
    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            ProtocolKind::Faquad => faquad::faquad_value(self.alpha_eff, self.j1_target, self.t_ramp, t),
            ProtocolKind::Invariant => self.ansatz.as_ref().expect("invariant ramp has ansatz").j1(t),
        }
    }

    /// `dJ̃₁/dt`, closed form.
    pub fn derivative(&self, t: f64) -> f64 {
        match self.kind {
            ProtocolKind::Faquad => {
                faquad::faquad_derivative(self.alpha_eff, self.j1_target, self.t_ramp, t)
            }
            ProtocolKind::Invariant => self.ansatz.as_ref().expect("invariant ramp has ansatz").j1_dot(t),
        }
    }
}
