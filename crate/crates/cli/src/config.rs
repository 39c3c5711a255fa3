//! Run configuration: a sectioned TOML file in laboratory units (GHz, MHz,
//! ns), converted to internal angular frequencies exactly once.

use serde::{Deserialize, Serialize};

use czpulse_core::device::DeviceParams;
use czpulse_core::propagation::{Method, PropagationConfig};
use czpulse_core::pulse::ProtocolKind;
use czpulse_core::sweep::SweepMode;
use czpulse_core::units;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub device: DeviceSection,
    pub protocol: ProtocolSection,
    pub propagation: PropagationSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub omega_a_ghz: f64,
    pub omega_b_ghz: f64,
    pub alpha_a_ghz: f64,
    pub alpha_b_ghz: f64,
    pub j_max_mhz: f64,
    pub charge_cutoff: usize,
    pub levels_kept: usize,
}

impl Default for DeviceSection {
    fn default() -> Self {
        // the shipped device values
        Self {
            omega_a_ghz: 6.00,
            omega_b_ghz: 5.67,
            alpha_a_ghz: -0.33,
            alpha_b_ghz: -0.33,
            j_max_mhz: 16.0,
            charge_cutoff: 20,
            levels_kept: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    /// `faquad` or `invariant`.
    pub kind: String,
    pub ramp_times_ns: Vec<f64>,
    /// `uncorrected` or `corrected`.
    pub mode: String,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            kind: "invariant".into(),
            ramp_times_ns: czpulse_core::sweep::default_ramp_times(),
            mode: "uncorrected".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step_ns: f64,
    /// `adaptive` or `piecewise-exponential`.
    pub method: String,
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_step_ns: 0.5, method: "adaptive".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub samples_per_ns: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), samples_per_ns: 1000 }
    }
}

impl RunConfig {
    /// Parses and validates a config file. Parse errors carry the line and
    /// column from the TOML reader.
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("in config {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        let d = &self.device;
        let positive = [
            ("device.omega_a_ghz", d.omega_a_ghz),
            ("device.omega_b_ghz", d.omega_b_ghz),
            ("device.j_max_mhz", d.j_max_mhz),
        ];
        for (key, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{key} must be positive, got {v}"));
            }
        }
        for (key, v) in [("device.alpha_a_ghz", d.alpha_a_ghz), ("device.alpha_b_ghz", d.alpha_b_ghz)] {
            if !(v < 0.0) {
                return Err(format!("{key} must be negative (anharmonicity), got {v}"));
            }
        }
        if d.charge_cutoff < 10 {
            return Err(format!("device.charge_cutoff must be at least 10, got {}", d.charge_cutoff));
        }
        if d.levels_kept < 3 {
            return Err(format!("device.levels_kept must be at least 3, got {}", d.levels_kept));
        }
        self.protocol_kind()?;
        self.sweep_mode()?;
        let ts = &self.protocol.ramp_times_ns;
        if ts.is_empty() {
            return Err("protocol.ramp_times_ns must not be empty".into());
        }
        for pair in ts.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(format!(
                    "protocol.ramp_times_ns must be strictly ascending, got {} then {}",
                    pair[0], pair[1]
                ));
            }
        }
        if !(ts[0] > 0.0) {
            return Err(format!("protocol.ramp_times_ns must be positive, got {}", ts[0]));
        }
        let p = &self.propagation;
        for (key, v) in [("propagation.abs_tol", p.abs_tol), ("propagation.rel_tol", p.rel_tol)] {
            if !(v > 0.0 && v <= 1e-6) {
                return Err(format!("{key} must lie in (0, 1e-6], got {v}"));
            }
        }
        if !(p.max_step_ns > 0.0) {
            return Err(format!("propagation.max_step_ns must be positive, got {}", p.max_step_ns));
        }
        self.method()?;
        if self.output.samples_per_ns == 0 {
            return Err("output.samples_per_ns must be at least 1".into());
        }
        Ok(())
    }

    pub fn protocol_kind(&self) -> Result<ProtocolKind, String> {
        self.protocol.kind.parse().map_err(|e| format!("protocol.kind: {e}"))
    }

    pub fn sweep_mode(&self) -> Result<SweepMode, String> {
        self.protocol.mode.parse().map_err(|e| format!("protocol.mode: {e}"))
    }

    pub fn method(&self) -> Result<Method, String> {
        match self.propagation.method.as_str() {
            "adaptive" => Ok(Method::Adaptive),
            "piecewise-exponential" => Ok(Method::PiecewiseExponential),
            other => Err(format!(
                "propagation.method: unknown method '{other}' (expected adaptive|piecewise-exponential)"
            )),
        }
    }

    pub fn device_params(&self) -> DeviceParams {
        let d = &self.device;
        DeviceParams {
            omega_a: units::ghz(d.omega_a_ghz),
            alpha_a: units::ghz(d.alpha_a_ghz),
            omega_b: units::ghz(d.omega_b_ghz),
            alpha_b: units::ghz(d.alpha_b_ghz),
            j_max: units::mhz(d.j_max_mhz),
            charge_cutoff: d.charge_cutoff,
            levels_kept: d.levels_kept,
        }
    }

    pub fn propagation_config(&self) -> Result<PropagationConfig, String> {
        Ok(PropagationConfig {
            abs_tol: self.propagation.abs_tol,
            rel_tol: self.propagation.rel_tol,
            max_step: self.propagation.max_step_ns,
            method: self.method()?,
        })
    }

    /// Serializes the parsed config; written beside outputs so a run can be
    /// reproduced exactly.
    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
