//! Optical-switch figures of merit from driven mean-field runs.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_meanfield, integrate_with_drive, periodicity, Periodicity, TimeTrace};
use crate::error::{Error, Result};
use crate::linear::{drift_matrix, stability};
use crate::meanfield::MeanFieldState;
use crate::params::{DriveConfig, SystemParams};
use crate::steady::steady_states;

/// Minimum Ω-grid size accepted by [`bandwidth`].
pub const MIN_BANDWIDTH_POINTS: usize = 20;
/// Output below this fraction of the window maximum counts as zero.
pub const ZERO_OUTPUT_TOL: f64 = 1e-12;
/// Jumps are located where the output crosses this fraction of its peak
/// along the leg.
pub const JUMP_FRACTION: f64 = 0.2;
/// Jumps are reported only when the loop area exceeds this fraction of
/// `max output * ramp span`.
pub const LOOP_AREA_TOL: f64 = 0.01;

/// Transient and measurement policy for driven runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurePolicy {
    pub transient_periods: usize,
    pub measured_periods: usize,
    pub samples_per_period: usize,
    pub tol: f64,
}

impl Default for MeasurePolicy {
    fn default() -> Self {
        Self {
            transient_periods: 50,
            measured_periods: 10,
            samples_per_period: 64,
            tol: crate::dynamics::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchMetrics {
    /// max / min output over the measured periods.
    pub switch_ratio: f64,
    /// Output-power modulation over input-power modulation.
    pub gain: f64,
    pub periodicity: Periodicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivenRun {
    pub trace: TimeTrace,
    /// Sample indices of the measured periods.
    pub measure: Range<usize>,
    pub periodicity: Periodicity,
}

/// Lowest stable steady state at constant drive, or the lowest state when
/// none is stable.
pub fn lower_branch_state(params: &SystemParams, eta0: f64, rocking: f64) -> Result<MeanFieldState> {
    let states = steady_states(params, eta0, rocking)?;
    let chosen = states
        .iter()
        .find(|s| stability(&drift_matrix(params, s)).is_stable())
        .or(states.first());
    Ok(chosen.map_or_else(MeanFieldState::zero, |s| s.as_meanfield()))
}

/// Runs the modulated drive from the lower branch and marks the
/// measurement window.
pub fn driven_run(params: &SystemParams, drive: &DriveConfig, policy: &MeasurePolicy) -> Result<DrivenRun> {
    drive.validate()?;
    if !(drive.p_amp > 0.0 && drive.omega_mod > 0.0) {
        return Err(Error::InvalidDrive(
            "a driven run needs p_amp > 0 and omega_mod > 0".into(),
        ));
    }
    if policy.measured_periods == 0 || policy.samples_per_period < 2 {
        return Err(Error::DegenerateGrid(
            "measurement needs at least one period and two samples per period".into(),
        ));
    }
    let periods = policy.transient_periods + policy.measured_periods;
    let spp = policy.samples_per_period;
    let init = lower_branch_state(params, drive.eta0, 0.0)?;
    let t1 = periods as f64 * drive.period();
    let trace = integrate_meanfield(params, drive, (0.0, t1), &init, policy.tol, periods * spp + 1)?;
    let n = trace.len();
    let measure = n - policy.measured_periods * spp - 1..n;
    let periodicity = periodicity(&trace, spp);
    Ok(DrivenRun {
        trace,
        measure,
        periodicity,
    })
}

fn extrema(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// max / min of the output power over `window`.
pub fn switch_ratio(trace: &TimeTrace, window: Range<usize>) -> Result<f64> {
    let (lo, hi) = extrema(&trace.output_power[window]);
    if !(lo > ZERO_OUTPUT_TOL * hi) {
        return Err(Error::UndefinedRatio { min_output: lo });
    }
    Ok(hi / lo)
}

/// Half peak-to-peak output power over half peak-to-peak input power.
pub fn gain(trace: &TimeTrace, window: Range<usize>) -> Result<f64> {
    let (in_lo, in_hi) = extrema(&trace.drive_power[window.clone()]);
    let (out_lo, out_hi) = extrema(&trace.output_power[window]);
    let input_swing = 0.5 * (in_hi - in_lo);
    if !(input_swing > f64::EPSILON * in_hi.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::UndefinedGain);
    }
    Ok(0.5 * (out_hi - out_lo) / input_swing)
}

pub fn switch_metrics(params: &SystemParams, drive: &DriveConfig, policy: &MeasurePolicy) -> Result<SwitchMetrics> {
    let run = driven_run(params, drive, policy)?;
    Ok(SwitchMetrics {
        switch_ratio: switch_ratio(&run.trace, run.measure.clone())?,
        gain: gain(&run.trace, run.measure.clone())?,
        periodicity: run.periodicity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthCurve {
    pub omega: Vec<f64>,
    pub gain: Vec<f64>,
    pub max_gain: f64,
    /// Total measure of `{omega : gain >= max_gain / sqrt 2}`.
    pub bandwidth: f64,
}

/// Length of the set where the piecewise-linear interpolant of `y(x)`
/// reaches `level`.
pub fn measure_above(x: &[f64], y: &[f64], level: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..x.len().saturating_sub(1) {
        let (x0, x1, y0, y1) = (x[k], x[k + 1], y[k], y[k + 1]);
        let (a, b) = (y0 >= level, y1 >= level);
        total += match (a, b) {
            (true, true) => x1 - x0,
            (false, false) => 0.0,
            _ => {
                let t = (level - y0) / (y1 - y0);
                let cross = x0 + t * (x1 - x0);
                if a {
                    cross - x0
                } else {
                    x1 - cross
                }
            }
        };
    }
    total
}

/// Gain versus modulation frequency and its -3 dB width.
pub fn bandwidth(
    params: &SystemParams,
    eta0: f64,
    p_amp: f64,
    omega_grid: &[f64],
    policy: &MeasurePolicy,
) -> Result<BandwidthCurve> {
    if omega_grid.len() < MIN_BANDWIDTH_POINTS {
        return Err(Error::DegenerateGrid(format!(
            "bandwidth needs at least {MIN_BANDWIDTH_POINTS} modulation frequencies, got {}",
            omega_grid.len()
        )));
    }
    if omega_grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) || omega_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateGrid(
            "modulation frequencies must be positive and strictly ascending".into(),
        ));
    }
    let gains = omega_grid
        .par_iter()
        .map(|&omega_mod| {
            let drive = DriveConfig {
                eta0,
                p_amp,
                omega_mod,
            };
            let run = driven_run(params, &drive, policy)?;
            gain(&run.trace, run.measure)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_gain = gains.iter().copied().fold(0.0f64, f64::max);
    let bandwidth = if max_gain > 0.0 {
        measure_above(omega_grid, &gains, max_gain / std::f64::consts::SQRT_2)
    } else {
        0.0
    };
    Ok(BandwidthCurve {
        omega: omega_grid.to_vec(),
        gain: gains,
        max_gain,
        bandwidth,
    })
}

/// Linear input-power ramp `input_min -> input_max -> input_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub input_min: f64,
    pub input_max: f64,
    /// Input power change per unit time.
    pub rate: f64,
    /// Samples per leg.
    pub points: usize,
}

impl Ramp {
    pub fn leg_duration(&self) -> f64 {
        (self.input_max - self.input_min) / self.rate
    }

    /// Input power at time `t` along the up-then-down ramp.
    pub fn input_at(&self, t: f64) -> f64 {
        let leg = self.leg_duration();
        let s = if t <= leg { t } else { 2.0 * leg - t };
        (self.input_min + self.rate * s.clamp(0.0, leg)).max(0.0)
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        Self { rate, ..*self }
    }

    fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.input_min >= 0.0 && self.input_max > self.input_min && self.input_max.is_finite()) {
            return Err(Error::DegenerateGrid(format!(
                "ramp needs 0 <= input_min < input_max, got [{}, {}]",
                self.input_min, self.input_max
            )));
        }
        if self.points < 2 {
            return Err(Error::DegenerateGrid("ramp needs at least 2 samples per leg".into()));
        }
        let limit = params.gamma_m / 10.0;
        if !(self.rate > 0.0 && self.rate <= limit) {
            return Err(Error::InvalidParams {
                field: "rate",
                reason: format!("ramp rate must lie in (0, gamma_m / 10 = {limit}], got {}", self.rate),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisLoop {
    /// Ascending input powers shared by both legs.
    pub input_power: Vec<f64>,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    /// Input power of the upward jump on the rising leg.
    pub jump_up: Option<f64>,
    /// Input power of the downward jump on the falling leg.
    pub jump_down: Option<f64>,
    /// `int |down - up| d(input)`.
    pub area: f64,
}

/// Crossing of `level`: the first rise on a rising leg, the last fall on
/// a falling leg. Both slices are in time order.
fn find_crossing(x: &[f64], y: &[f64], level: f64, rising: bool) -> Option<f64> {
    let crosses = |k: &usize| {
        if rising {
            y[*k] < level && y[*k + 1] >= level
        } else {
            y[*k] >= level && y[*k + 1] < level
        }
    };
    let k = if rising {
        (0..y.len() - 1).find(crosses)?
    } else {
        (0..y.len() - 1).rev().find(crosses)?
    };
    let t = (level - y[k]) / (y[k + 1] - y[k]);
    Some(x[k] + t * (x[k + 1] - x[k]))
}

/// Quasi-static sweep of the input power up and back down with a static
/// rocking offset, starting on the lower branch.
pub fn hysteresis_sweep(params: &SystemParams, ramp: &Ramp, rocking: f64, tol: f64) -> Result<HysteresisLoop> {
    ramp.validate(params)?;
    let leg = ramp.leg_duration();
    let n = ramp.points;
    let up_times: Vec<f64> = (0..n).map(|k| leg * k as f64 / (n - 1) as f64).collect();
    let mut times = up_times.clone();
    times.extend(up_times.iter().rev().skip(1).map(|t| 2.0 * leg - t));

    let init = lower_branch_state(params, ramp.input_min.sqrt(), rocking)?;
    let trace = integrate_with_drive(params, |t| ramp.input_at(t).sqrt(), rocking, &times, &init, tol)?;

    let input_power: Vec<f64> = up_times.iter().map(|&t| ramp.input_at(t)).collect();
    let up = trace.output_power[..n].to_vec();
    let mut down: Vec<f64> = trace.output_power[n - 1..].to_vec();
    down.reverse();

    let area: f64 = (0..n - 1)
        .map(|k| {
            let d0 = (down[k] - up[k]).abs();
            let d1 = (down[k + 1] - up[k + 1]).abs();
            0.5 * (d0 + d1) * (input_power[k + 1] - input_power[k])
        })
        .sum();
    let peak = trace.output_power.iter().copied().fold(0.0f64, f64::max);
    let hysteretic = area > LOOP_AREA_TOL * peak * (ramp.input_max - ramp.input_min);
    let level = JUMP_FRACTION * peak;
    let falling_input: Vec<f64> = input_power.iter().rev().copied().collect();
    let (jump_up, jump_down) = if hysteretic {
        (
            find_crossing(&input_power, &up, level, true),
            find_crossing(&falling_input, &trace.output_power[n - 1..], level, false),
        )
    } else {
        (None, None)
    };
    Ok(HysteresisLoop {
        input_power,
        up,
        down,
        jump_up,
        jump_down,
        area,
    })
}

/// Jump points at ramp rates `r, r/2, r/4` and their zero-rate limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticJumps {
    pub rates: [f64; 3],
    pub jump_up: [Option<f64>; 3],
    pub jump_down: [Option<f64>; 3],
    pub extrapolated_up: Option<f64>,
    pub extrapolated_down: Option<f64>,
}

/// Delay exponent of a slow passage through a saddle-node: the jump lags
/// the fold by `O(rate^(2/3))`.
pub const SADDLE_NODE_ORDER: f64 = 2.0 / 3.0;

/// Richardson extrapolation to `r = 0` of `f(r)`, `f(r/2)`, `f(r/4)` whose
/// leading error term is `r^order`. The first value only feeds the
/// residual check in [`AdiabaticJumps`].
pub fn richardson_limit(values: [f64; 3], order: f64) -> f64 {
    let [_, f2, f3] = values;
    f3 - (f2 - f3) / (2f64.powf(order) - 1.0)
}

pub fn adiabatic_jumps(params: &SystemParams, ramp: &Ramp, rocking: f64, tol: f64) -> Result<AdiabaticJumps> {
    let rates = [ramp.rate, ramp.rate / 2.0, ramp.rate / 4.0];
    let loops = rates
        .par_iter()
        .map(|&r| hysteresis_sweep(params, &ramp.with_rate(r), rocking, tol))
        .collect::<Result<Vec<_>>>()?;
    let jump_up = [loops[0].jump_up, loops[1].jump_up, loops[2].jump_up];
    let jump_down = [loops[0].jump_down, loops[1].jump_down, loops[2].jump_down];
    let limit = |j: [Option<f64>; 3]| Some(richardson_limit([j[0]?, j[1]?, j[2]?], SADDLE_NODE_ORDER));
    Ok(AdiabaticJumps {
        rates,
        jump_up,
        jump_down,
        extrapolated_up: limit(jump_up),
        extrapolated_down: limit(jump_down),
    })
}
