//! Input-noise correlations in the frequency domain.
//!
//! Channels are ordered `[zeta, u1_in, v1_in, u2_in, v2_in]`. With
//! `<f_k(w) f_l(w')> = 2 pi C_kl(w) delta(w + w')` the table is
//!
//! ```text
//! C_zeta,zeta = (gamma_m / omega_m) w [1 + coth(hbar w / 2 k_B T)]
//! C_uu = C_vv = 1,  C_uv = i,  C_vu = -i        (each cavity)
//! ```
//!
//! and every other entry vanishes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::SystemParams;

pub const CHANNELS: usize = 5;
pub const CHANNEL_NAMES: [&str; CHANNELS] = ["zeta", "u1_in", "v1_in", "u2_in", "v2_in"];

/// Below this |hbar w / 2 k_B T| the thermal factor is evaluated by series.
const SERIES_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub thermal_ratio: f64,
    pub gamma_m: f64,
    pub omega_m: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
}

impl NoiseModel {
    pub fn from_params(params: &SystemParams) -> Self {
        Self {
            thermal_ratio: params.thermal_ratio,
            gamma_m: params.gamma_m,
            omega_m: params.omega_m,
            kappa_a: params.kappa_a,
            kappa_b: params.kappa_b,
        }
    }

    /// Row of the drift equations each channel drives, and its coefficient.
    pub fn injection(&self) -> [(usize, f64); CHANNELS] {
        let (sb, sa) = (self.kappa_b.sqrt(), self.kappa_a.sqrt());
        [(1, 1.0), (2, sb), (3, sb), (4, sa), (5, sa)]
    }

    /// `w coth(hbar w / 2 k_B T)`, with its finite limit `2 k_B T / hbar` at
    /// `w = 0`.
    pub fn thermal_even_part(&self, omega: f64) -> f64 {
        let beta = self.thermal_ratio;
        let x = 0.5 * beta * omega;
        if x.abs() < SERIES_CUTOFF {
            let x2 = x * x;
            (2.0 / beta) * (1.0 + x2 / 3.0 - x2 * x2 / 45.0)
        } else {
            omega / x.tanh()
        }
    }

    /// `w [1 + coth(hbar w / 2 k_B T)]`.
    pub fn brownian_factor(&self, omega: f64) -> f64 {
        omega + self.thermal_even_part(omega)
    }

    /// Brownian correlation `(gamma_m / omega_m) w [1 + coth(...)]`.
    pub fn brownian_weight(&self, omega: f64) -> f64 {
        self.gamma_m / self.omega_m * self.brownian_factor(omega)
    }

    /// Correlation matrix `C(w)` over the five channels.
    pub fn correlation(&self, omega: f64) -> [[Complex64; CHANNELS]; CHANNELS] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let mut c = [[zero; CHANNELS]; CHANNELS];
        c[0][0] = Complex64::new(self.brownian_weight(omega), 0.0);
        for base in [1, 3] {
            c[base][base] = one;
            c[base + 1][base + 1] = one;
            c[base][base + 1] = i;
            c[base + 1][base] = -i;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(thermal_ratio: f64) -> NoiseModel {
        NoiseModel {
            thermal_ratio,
            gamma_m: 0.1,
            omega_m: 1.0,
            kappa_a: 0.1,
            kappa_b: 0.2,
        }
    }

    #[test]
    fn zero_frequency_limit_is_finite() {
        let n = model(1e-6);
        assert_relative_eq!(n.brownian_factor(0.0), 2e6);
        // continuity across the series cutoff
        let w = 2.0 * SERIES_CUTOFF / n.thermal_ratio;
        let below = n.thermal_even_part(w * (1.0 - 1e-9));
        let above = n.thermal_even_part(w * (1.0 + 1e-9));
        assert_relative_eq!(below, above, max_relative = 1e-8);
    }

    #[test]
    fn matches_direct_coth() {
        let n = model(0.7);
        for w in [0.01, 0.3, 1.0, 2.5, -0.4] {
            let direct = w * (1.0 + 1.0 / (0.5f64 * 0.7 * w).tanh());
            assert_relative_eq!(n.brownian_factor(w), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn even_part_symmetry() {
        let n = model(0.3);
        for w in [1e-5, 0.2, 3.0] {
            assert_relative_eq!(n.thermal_even_part(w), n.thermal_even_part(-w));
            // w(1+coth) at -w equals w(coth - 1) at +w
            assert_relative_eq!(
                n.brownian_factor(-w),
                n.thermal_even_part(w) - w,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn optical_blocks_are_hermitian_and_psd() {
        let c = model(1.0).correlation(0.5);
        for (k, row) in c.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                assert_eq!(*v, c[l][k].conj());
            }
        }
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let det = c[1][1] * c[2][2] - c[1][2] * c[2][1];
        assert_eq!(det, Complex64::new(0.0, 0.0));
    }
}
