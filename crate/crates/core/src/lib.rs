//! Mean-field and linear-response model of two optically coupled
//! semiconductor microcavities, one carrying a movable mirror and the other a
//! quantum dot.
//!
//! * [`steady`], [`bistability`]: steady states via the transmitted-power
//!   cubic, an independent Newton solver, and bistability curves.
//! * [`linear`], [`spectrum`], [`peaks`]: the 6x6 drift
//!   matrix, stability, and the mirror displacement spectrum.
//! * [`closed_form`]: the polynomial closed form of the spectrum, audited
//!   against the matrix route.
//! * [`dynamics`], [`switching`]: time integration under a modulated drive,
//!   switch ratio, gain, bandwidth and hysteresis loops.
//!
//! All rates are in units of the mechanical frequency.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod bistability;
pub mod closed_form;
pub mod dynamics;
pub mod error;
pub mod linear;
pub mod meanfield;
pub mod noise;
pub mod ode;
pub mod params;
pub mod peaks;
pub mod poly;
pub mod spectrum;
pub mod steady;
pub mod switching;

pub use bistability::{bistability_curve, BistabilityCurve, BranchRoot, CurvePoint, Knee};
pub use closed_form::{audit_closed_form, spectrum_closed_form, ClosedFormAudit, ThermalFactor};
pub use dynamics::{integrate_meanfield, integrate_with_drive, periodicity, Periodicity, TimeTrace};
pub use error::{Error, Result};
pub use linear::{drift_matrix, fluctuation_amplitudes, stability, DriftMatrix, FluctuationAmplitudes, Stability, StabilityReport};
pub use meanfield::MeanFieldState;
pub use noise::NoiseModel;
pub use params::{drive_value, helper_constants, rocking_parameter, DriveConfig, SystemParams};
pub use peaks::Peak;
pub use poly::RealRoot;
pub use spectrum::{detect_peaks, spectrum_matrix, SpectrumSeries};
pub use switching::{
    adiabatic_jumps, bandwidth, driven_run, gain, hysteresis_sweep, switch_metrics, switch_ratio, AdiabaticJumps,
    BandwidthCurve, DrivenRun, HysteresisLoop, MeasurePolicy, Ramp, SwitchMetrics,
};
pub use steady::{
    cubic_coefficients, solve_transmitted_power, steady_state_direct, steady_state_from_ptrans,
    steady_states, SteadyState,
};
