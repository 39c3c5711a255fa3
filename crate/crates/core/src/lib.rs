//! Pulse design, simulation and calibration of fast CZ gates between two
//! transmon qubits connected by a tunable coupler.
//!
//! The crate is organized bottom-up:
//!
//! - [`operators`] / [`propagation`]: dense Hermitian linear algebra and a
//!   verified time-dependent Schrödinger propagator,
//! - [`transmon`] / [`device`]: charge-basis transmon spectra, the coupled
//!   two-transmon Hamiltonian, its six-level effective model, dressed
//!   coupling strengths and the Schrieffer-Wolff two-level reduction,
//! - [`pulse`]: FAQUAD and invariant-engineered coupling ramps, the
//!   symmetric on/hold/off schedule and Lewis-Riesenfeld phases,
//! - [`gate`]: full-gate simulation, phase extraction and fidelity metrics,
//! - [`optimize`] / [`sweep`]: Stark-shift corrections via joint waiting
//!   time / detuning calibration, and ramp-time sweeps.
//!
//! All frequencies and energies inside the crate are angular frequencies in
//! rad/ns with ħ = 1; see [`units`] for the laboratory-unit conversions.

// `!(x > 0.0)` is used instead of `x <= 0.0` in input validation so that
// NaN arguments are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod error;
pub mod gate;
pub mod operators;
pub mod optimize;
pub mod propagation;
pub mod pulse;
pub mod quadrature;
pub mod sweep;
pub mod transmon;
pub mod units;

pub use device::{DeviceParams, DeviceSpec, DressedCouplings, StarkShiftData};
pub use error::{Error, Result};
pub use gate::{GateModel, GateOutcome, PhaseDecomposition};
pub use operators::{HermitianOperator, StateVector};
pub use propagation::{Method, PropagationConfig};
pub use pulse::{ControlSchedule, InvariantAnsatz, LrPhases, ProtocolKind, RampWaveform};
pub use sweep::{SweepMode, SweepResult, SweepRow};
pub use transmon::TransmonSpec;
