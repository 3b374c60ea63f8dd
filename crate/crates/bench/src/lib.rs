//! Shared fixtures for the benchmarks.

use optomech_core::linear::{drift_matrix, stability};
use optomech_core::steady::steady_states;
use optomech_core::{SteadyState, SystemParams};

/// Input power in the middle of the reference bistable window at `C = 0.1`.
pub const BISTABLE_INPUT: f64 = 0.4;

/// Lowest stable steady state of the spectrum reference set at
/// `eta0 = 0.1`, `C = 0.1`.
pub fn spectrum_fixture(j: f64) -> (SystemParams, SteadyState) {
    let p = SystemParams::spectrum_reference(j, 0.2);
    let s = steady_states(&p, 0.1, 0.1)
        .expect("cubic solves")
        .into_iter()
        .find(|s| stability(&drift_matrix(&p, s)).is_stable())
        .expect("a stable state exists");
    (p, s)
}
