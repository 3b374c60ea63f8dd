//! Mirror displacement spectrum by direct inversion of the drift matrix.
//!
//! With `dO/dt = M O + f` and `O(w) = int O(t) e^{i w t} dt`, the position
//! fluctuation is `q(w) = sum_k x_k(w) f_k(w)` where `x_k` is the `q` entry of
//! `(-i w I - M)^{-1}` applied to the injection vector of channel `k`. The
//! symmetrised spectrum is
//!
//! ```text
//! S_q(w) = 1/2 [ sum_kl x_k C_kl(w) conj(x_l) + sum_kl conj(x_k) C_kl(-w) x_l ]
//! ```
//!
//! No further prefactor is applied: for a free thermal oscillator at high
//! temperature `int S_q dw / 2 pi` equals `k_B T / hbar omega_m`, the
//! equipartition value of the dimensionless position variance.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{drift_matrix, stability, DriftMatrix};
use crate::noise::{NoiseModel, CHANNELS};
use crate::params::SystemParams;
use crate::peaks::{find_peaks, Peak, MIN_RELATIVE_PROMINENCE};
use crate::steady::SteadyState;

/// Tolerated imaginary residue relative to the largest spectral value.
pub const IMAG_RESIDUE_TOL: f64 = 1e-12;

pub const DEFAULT_OMEGA_MAX: f64 = 2.5;
pub const DEFAULT_OMEGA_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub omega: Vec<f64>,
    pub s_q: Vec<f64>,
    pub peaks: Vec<Peak>,
    /// max |Im S| / max S over the grid.
    pub imag_residue: f64,
}

impl SpectrumSeries {
    pub fn from_values(omega: Vec<f64>, s_q: Vec<f64>, imag_residue: f64) -> Self {
        let peaks = find_peaks(&omega, &s_q, MIN_RELATIVE_PROMINENCE);
        Self {
            omega,
            s_q,
            peaks,
            imag_residue,
        }
    }

    /// Value interpolated linearly at `w` (clamped to the grid).
    pub fn value_at(&self, w: f64) -> f64 {
        let x = &self.omega;
        if w <= x[0] {
            return self.s_q[0];
        }
        let k = x.partition_point(|&v| v < w);
        if k >= x.len() {
            return *self.s_q.last().unwrap();
        }
        let t = (w - x[k - 1]) / (x[k] - x[k - 1]);
        self.s_q[k - 1] * (1.0 - t) + self.s_q[k] * t
    }
}

/// Peak list of an existing series, recomputed with the default prominence.
pub fn detect_peaks(series: &SpectrumSeries) -> Vec<Peak> {
    find_peaks(&series.omega, &series.s_q, MIN_RELATIVE_PROMINENCE)
}

/// Uniform grid on `[lo, hi]` with `n` points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn default_omega_grid() -> Vec<f64> {
    linspace(0.0, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_POINTS)
}

/// Refuses steady states whose drift matrix has an eigenvalue with
/// non-negative real part.
pub fn require_stable(drift: &DriftMatrix) -> Result<()> {
    let report = stability(drift);
    if report.is_stable() {
        Ok(())
    } else {
        Err(Error::UnstableSteadyState {
            max_real_part: report.max_real_part,
        })
    }
}

/// `q` response `x_k(w)` to each noise channel, injection included.
pub fn channel_responses(
    m: &Matrix6<f64>,
    noise: &NoiseModel,
    omega: f64,
) -> Result<[Complex64; CHANNELS]> {
    let a: Matrix6<Complex64> =
        Matrix6::from_fn(|r, c| {
            let diag = if r == c { Complex64::new(0.0, -omega) } else { Complex64::new(0.0, 0.0) };
            diag - m[(r, c)]
        });
    let lu = a.lu();
    let mut out = [Complex64::new(0.0, 0.0); CHANNELS];
    for (k, (row, coef)) in noise.injection().into_iter().enumerate() {
        let mut rhs = Vector6::<Complex64>::zeros();
        rhs[row] = Complex64::new(coef, 0.0);
        let x = lu.solve(&rhs).ok_or_else(|| {
            Error::SingularResponse(format!("(-i w I - M) is singular at w = {omega}"))
        })?;
        if !x[0].is_finite() {
            return Err(Error::SingularResponse(format!(
                "non-finite response at w = {omega}"
            )));
        }
        out[k] = x[0];
    }
    Ok(out)
}

/// Symmetrised spectral density at one frequency; returns (Re, Im).
pub fn spectral_density(x: &[Complex64; CHANNELS], noise: &NoiseModel, omega: f64) -> Complex64 {
    let c_pos = noise.correlation(omega);
    let c_neg = noise.correlation(-omega);
    let mut forward = Complex64::new(0.0, 0.0);
    let mut backward = Complex64::new(0.0, 0.0);
    for k in 0..CHANNELS {
        for l in 0..CHANNELS {
            forward += x[k] * c_pos[k][l] * x[l].conj();
            backward += x[k].conj() * c_neg[k][l] * x[l];
        }
    }
    0.5 * (forward + backward)
}

/// Displacement spectrum through the matrix route.
pub fn spectrum_matrix(
    params: &SystemParams,
    steady: &SteadyState,
    noise: &NoiseModel,
    omega_grid: &[f64],
) -> Result<SpectrumSeries> {
    let drift = drift_matrix(params, steady);
    require_stable(&drift)?;
    let mut s_q = Vec::with_capacity(omega_grid.len());
    let mut max_imag = 0.0f64;
    for &w in omega_grid {
        let x = channel_responses(&drift.m, noise, w)?;
        let s = spectral_density(&x, noise, w);
        max_imag = max_imag.max(s.im.abs());
        s_q.push(s.re);
    }
    let max_s = s_q.iter().copied().fold(0.0f64, f64::max);
    let min_s = s_q.iter().copied().fold(f64::INFINITY, f64::min);
    if min_s < -IMAG_RESIDUE_TOL * max_s {
        return Err(Error::NonPhysicalSpectrum(format!(
            "negative spectral density {min_s:e} (max {max_s:e})"
        )));
    }
    let imag_residue = if max_s > 0.0 { max_imag / max_s } else { max_imag };
    if imag_residue > IMAG_RESIDUE_TOL {
        return Err(Error::NonPhysicalSpectrum(format!(
            "imaginary residue {imag_residue:e} exceeds tolerance"
        )));
    }
    Ok(SpectrumSeries::from_values(omega_grid.to_vec(), s_q, imag_residue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::steady_states;
    use approx::assert_relative_eq;

    fn decoupled(thermal_ratio: f64) -> (SystemParams, SteadyState) {
        let p = SystemParams {
            chi: 0.0,
            j_coupling: 0.0,
            thermal_ratio,
            gamma_m: 0.05,
            ..SystemParams::bistable_reference()
        };
        let s = steady_states(&p, 0.1, 0.0).unwrap()[0];
        (p, s)
    }

    #[test]
    fn free_oscillator_is_thermal_lorentzian() {
        let (p, s) = decoupled(0.5);
        let noise = NoiseModel::from_params(&p);
        let grid = linspace(0.0, 2.5, 2000);
        let series = spectrum_matrix(&p, &s, &noise, &grid).unwrap();
        for (&w, &v) in grid.iter().zip(&series.s_q) {
            let chi_q = p.omega_m
                / Complex64::new(p.omega_m * p.omega_m - w * w, -p.gamma_m * w);
            let expected = chi_q.norm_sqr() * p.gamma_m / p.omega_m * noise.thermal_even_part(w);
            assert_relative_eq!(v, expected, max_relative = 1e-10);
        }
        assert_eq!(series.peaks.len(), 1);
        assert!((series.peaks[0].position - 1.0).abs() < 2.0 * (grid[1] - grid[0]));
        // full width ~ gamma_m
        assert!((series.peaks[0].width - p.gamma_m).abs() < 0.1 * p.gamma_m);
    }

    #[test]
    fn high_temperature_equipartition() {
        // int S dw / 2 pi over the whole line = k_B T / hbar omega_m.
        let (p, s) = decoupled(1e-3);
        let noise = NoiseModel::from_params(&p);
        let grid = linspace(-20.0, 20.0, 400_001);
        let series = spectrum_matrix(&p, &s, &noise, &grid).unwrap();
        let dw = grid[1] - grid[0];
        let integral: f64 = series.s_q.iter().sum::<f64>() * dw / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(integral, 1.0 / p.thermal_ratio, max_relative = 2e-3);
    }

    #[test]
    fn unstable_states_are_refused() {
        let p = SystemParams::bistable_reference();
        let window: Vec<f64> = (1..400)
            .map(|i| (i as f64 * 0.005).sqrt())
            .filter(|&e| crate::steady::solve_transmitted_power(&p, e, 0.1).unwrap().len() == 3)
            .collect();
        let eta0 = window[window.len() / 2];
        let middle = steady_states(&p, eta0, 0.1).unwrap()[1];
        let noise = NoiseModel::from_params(&p);
        assert!(matches!(
            spectrum_matrix(&p, &middle, &noise, &[0.5, 1.0]),
            Err(Error::UnstableSteadyState { .. })
        ));
    }

    #[test]
    fn linspace_edges() {
        assert!(linspace(0.0, 1.0, 0).is_empty());
        assert_eq!(linspace(0.3, 1.0, 1), vec![0.3]);
        let g = linspace(0.0, 2.5, 2000);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 2.5);
    }
}
