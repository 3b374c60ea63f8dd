//! Time-domain integration of the mean-field equations.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{rhs, MeanFieldState};
use crate::ode::{solve, OdeOptions, OdeStats};
use crate::params::{drive_value, DriveConfig, SystemParams};

/// Default local relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Relative tolerance of the periodicity check.
pub const PERIODICITY_TOL: f64 = 1e-4;
/// Largest subharmonic order searched for.
pub const MAX_SUBHARMONIC: usize = 8;

type State = SVector<f64, 8>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub t: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    /// `|a(t)|^2`.
    pub output_power: Vec<f64>,
    /// `eta(t)^2`.
    pub drive_power: Vec<f64>,
    pub stats: OdeStats,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last_state(&self) -> &MeanFieldState {
        self.states.last().expect("trace has at least two samples")
    }

    /// Sample indices with `t_from <= t <= t_to`.
    pub fn window(&self, t_from: f64, t_to: f64) -> std::ops::Range<usize> {
        let lo = self.t.partition_point(|&t| t < t_from);
        let hi = self.t.partition_point(|&t| t <= t_to);
        lo..hi
    }
}

/// Uniform grid of `n >= 2` times covering `[t0, t1]`.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Integrates with an arbitrary drive amplitude `eta(t)` and a static
/// rocking offset, sampling at `times` (the first entry is the start).
pub fn integrate_with_drive<E>(
    params: &SystemParams,
    eta: E,
    rocking: f64,
    times: &[f64],
    init: &MeanFieldState,
    tol: f64,
) -> Result<TimeTrace>
where
    E: Fn(f64) -> f64,
{
    if times.len() < 2 {
        return Err(Error::DegenerateGrid(format!(
            "a trace needs at least 2 samples, got {}",
            times.len()
        )));
    }
    if !init.is_finite() {
        return Err(Error::IntegrationFailure {
            t_last: times[0],
            reason: "initial state is not finite".into(),
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParams {
            field: "tol",
            reason: format!("must lie in (0, 1), got {tol}"),
        });
    }
    params.validate()?;
    let f = |t: f64, y: &State| {
        let d = rhs(params, eta(t), rocking, &MeanFieldState::from_slice(y.as_slice()));
        State::from(d.to_array())
    };
    let (ys, stats) = solve(
        f,
        times[0],
        State::from(init.to_array()),
        times,
        &OdeOptions::with_tol(tol),
    )?;
    let states: Vec<MeanFieldState> = ys
        .iter()
        .map(|y| MeanFieldState::from_slice(y.as_slice()))
        .collect();
    Ok(TimeTrace {
        t: times.to_vec(),
        output_power: states.iter().map(|s| s.a.norm_sqr()).collect(),
        drive_power: times.iter().map(|&t| eta(t).powi(2)).collect(),
        states,
        stats,
    })
}

/// Integrates under `eta(t) = eta0 + p_amp cos(omega_mod t)` over
/// `t_span` with `samples` uniform samples. The modulation is resolved
/// explicitly, so no rocking offset enters.
pub fn integrate_meanfield(
    params: &SystemParams,
    drive: &DriveConfig,
    t_span: (f64, f64),
    init: &MeanFieldState,
    tol: f64,
    samples: usize,
) -> Result<TimeTrace> {
    drive.validate()?;
    if !(t_span.1 > t_span.0) {
        return Err(Error::DegenerateGrid(format!(
            "time span must be increasing, got {t_span:?}"
        )));
    }
    let times = uniform_times(t_span.0, t_span.1, samples);
    integrate_with_drive(params, |t| drive_value(t, drive), 0.0, &times, init, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "order")]
pub enum Periodicity {
    /// Repeats with the drive period.
    Periodic,
    /// Repeats only after the given number of drive periods.
    Subharmonic(usize),
    Aperiodic,
}

/// Poincaré-section check on the last drive period of `trace`, which must
/// be sampled with exactly `samples_per_period` samples per drive period.
pub fn periodicity(trace: &TimeTrace, samples_per_period: usize) -> Periodicity {
    let n = trace.len();
    let scale = trace
        .states
        .iter()
        .fold(0.0f64, |m, s| m.max(s.max_abs()))
        .max(f64::MIN_POSITIVE);
    for order in 1..=MAX_SUBHARMONIC {
        let lag = order * samples_per_period;
        if n < lag + samples_per_period {
            break;
        }
        let deviation = (n - samples_per_period..n)
            .map(|k| {
                let (a, b) = (trace.states[k].to_array(), trace.states[k - lag].to_array());
                a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            })
            .fold(0.0f64, f64::max);
        if deviation <= PERIODICITY_TOL * scale {
            if order > 1 {
                log::info!("response repeats after {order} drive periods");
            }
            return if order == 1 {
                Periodicity::Periodic
            } else {
                Periodicity::Subharmonic(order)
            };
        }
    }
    log::info!("response is not periodic within {MAX_SUBHARMONIC} drive periods");
    Periodicity::Aperiodic
}
