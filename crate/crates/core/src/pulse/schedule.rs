//! The full gate schedule: switch-on ramp, constant hold, mirrored
//! switch-off, plus the analytic waiting time that completes the π rotation
//! in the `(|11⟩, |20⟩)` pair.

use super::RampWaveform;
use crate::device::DressedCouplings;
use crate::error::{Error, Result};
use crate::quadrature;

/// The physical coupling profile `J(t)` over the whole gate
/// `T_g = 2T + t_w`: `J = J̃₁/r₁`, held constant on the wait window, with
/// the switch-off mirroring the switch-on, `J(T + t_w + s) = J(T − s)`.
#[derive(Debug, Clone)]
pub struct ControlSchedule {
    ramp: RampWaveform,
    t_wait: f64,
    r1: f64,
}

impl ControlSchedule {
    pub fn ramp(&self) -> &RampWaveform {
        &self.ramp
    }

    pub fn t_ramp(&self) -> f64 {
        self.ramp.t_ramp()
    }

    pub fn t_wait(&self) -> f64 {
        self.t_wait
    }

    pub fn t_gate(&self) -> f64 {
        2.0 * self.ramp.t_ramp() + self.t_wait
    }

    /// `J̃₁(t)` over the full schedule.
    pub fn j1(&self, t: f64) -> f64 {
        let t_ramp = self.ramp.t_ramp();
        if t <= t_ramp {
            self.ramp.value(t.max(0.0))
        } else if t < t_ramp + self.t_wait {
            self.ramp.value(t_ramp)
        } else {
            self.ramp.value((self.t_gate() - t).clamp(0.0, t_ramp))
        }
    }

    /// Physical coupling `J(t) = J̃₁(t)/r₁`.
    pub fn j(&self, t: f64) -> f64 {
        self.j1(t) / self.r1
    }

    /// The held coupling `J(T)`.
    pub fn j_hold(&self) -> f64 {
        self.ramp.value(self.ramp.t_ramp()) / self.r1
    }

    /// `J̃₁ → J` conversion factor in use.
    pub fn r1(&self) -> f64 {
        self.r1
    }
}

/// Waiting time completing the half rotation:
/// `t_w = (π − 2 ∫₀ᵀ J̃₃ dt) / J̃₃(T)` with `J̃₃ = (r₃/r₁) J̃₁`.
pub fn waiting_time(ramp: &RampWaveform, dressed: &DressedCouplings) -> Result<f64> {
    let scale = dressed.r3 / dressed.r1;
    let j3_end = scale * ramp.value(ramp.t_ramp());
    if !(j3_end > 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!("waiting time needs J̃₃(T) > 0, got {j3_end}"),
        });
    }
    let area = quadrature::integrate(|t| scale * ramp.value(t), 0.0, ramp.t_ramp(), 1e-12);
    let t_w = (std::f64::consts::PI - 2.0 * area) / j3_end;
    if t_w < 0.0 {
        return Err(Error::NegativeWaitingTime { t_w });
    }
    Ok(t_w)
}

/// Assembles the symmetric schedule from a switch-on ramp and a waiting
/// time.
pub fn build_schedule(ramp: RampWaveform, t_wait: f64, dressed: &DressedCouplings) -> Result<ControlSchedule> {
    if !(t_wait >= 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!("waiting time must be non-negative, got {t_wait}"),
        });
    }
    Ok(ControlSchedule { ramp, t_wait, r1: dressed.r1 })
}
