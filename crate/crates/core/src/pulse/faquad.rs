//! Fast quasiadiabatic (FAQUAD) ramps: the coupling profile that keeps the
//! two-level adiabaticity parameter
//! `μ(t) = |⟨+|dĤ₂/dt|−⟩| / (E₊ − E₋)²` constant along the switch-on.

use super::{ProtocolKind, RampWaveform};
use crate::error::{Error, Result};

pub(super) fn faquad_value(alpha_eff: f64, j1_target: f64, t_ramp: f64, t: f64) -> f64 {
    let s = t / t_ramp;
    let d = alpha_eff * alpha_eff + 4.0 * j1_target * j1_target * (1.0 - s * s);
    -alpha_eff * j1_target * s / d.sqrt()
}

pub(super) fn faquad_derivative(alpha_eff: f64, j1_target: f64, t_ramp: f64, t: f64) -> f64 {
    let s = t / t_ramp;
    let d = alpha_eff * alpha_eff + 4.0 * j1_target * j1_target * (1.0 - s * s);
    let a2_4j2 = alpha_eff * alpha_eff + 4.0 * j1_target * j1_target;
    -alpha_eff * j1_target / t_ramp * a2_4j2 / d.powf(1.5)
}

/// Constant-μ switch-on from 0 to `j1_target` in time `t_ramp`, designed
/// for effective splitting `alpha_eff < 0`. Strictly increasing.
pub fn faquad_ramp(alpha_eff: f64, j1_target: f64, t_ramp: f64) -> Result<RampWaveform> {
    if !(alpha_eff < 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!("FAQUAD ramp needs alpha_eff < 0, got {alpha_eff}"),
        });
    }
    if !(j1_target >= 0.0) || !(t_ramp > 0.0) {
        return Err(Error::InvalidConfig {
            reason: format!("FAQUAD ramp needs J̃₁(T) >= 0 and T > 0, got {j1_target}, {t_ramp}"),
        });
    }
    RampWaveform {
        kind: ProtocolKind::Faquad,
        t_ramp,
        j1_target,
        alpha_eff,
        ansatz: None,
    }
    .validate()
}

/// The adiabaticity parameter of any ramp at time `t`, evaluated from the
/// waveform derivative: `μ = |J̇̃₁ α| / (4J̃₁² + α²)^{3/2}`.
pub fn faquad_mu(ramp: &RampWaveform, t: f64) -> f64 {
    let j1 = ramp.value(t);
    let a = ramp.alpha_eff();
    (ramp.derivative(t) * a).abs() / (4.0 * j1 * j1 + a * a).powf(1.5)
}
