//! Unit conventions and conversions.
//!
//! Internally every energy and frequency is an angular frequency in rad/ns
//! (ħ = 1), times are in ns. Laboratory inputs are ordinary frequencies in
//! GHz or MHz and are converted exactly once, at the API boundary.

use std::f64::consts::TAU;

/// Ordinary frequency in GHz to angular frequency in rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// Ordinary frequency in MHz to angular frequency in rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Angular frequency in rad/ns to ordinary frequency in GHz.
pub fn to_ghz(w: f64) -> f64 {
    w / TAU
}

/// Angular frequency in rad/ns to ordinary frequency in MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU * 1e3
}
