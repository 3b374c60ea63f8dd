//! Mean-value equations of motion.
//!
//! Input-noise means vanish, the dot inversion is frozen at `n_inversion`
//! and the transverse pump is resonant with the dot frame, so the only pump
//! phase left is `theta`:
//!
//! ```text
//! da/dt = -(kappa_a + i delta_a) a - i J b + eta(t) + i G a q
//! db/dt = -(kappa_b + i delta_b) b - i g s - i J a
//! ds/dt = -(kappa_d + i delta_d) s + i g N b - i lambda e^{-i theta} N
//! dq/dt = omega_m p
//! dp/dt = -omega_m q + G (|a|^2 + C) - gamma_m p
//! ```
//!
//! `s` is the dot coherence <sigma_ge>. `C` is an optional static
//! rocking offset: it reproduces the averaged effect of a fast modulation in
//! quasi-static runs and is zero whenever the modulation is integrated
//! explicitly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::SystemParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub a: Complex64,
    pub b: Complex64,
    pub sigma_ge: Complex64,
    pub q: f64,
    pub p: f64,
}

impl MeanFieldState {
    pub const DIM: usize = 8;

    pub fn zero() -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            sigma_ge: Complex64::new(0.0, 0.0),
            q: 0.0,
            p: 0.0,
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.a.re,
            self.a.im,
            self.b.re,
            self.b.im,
            self.sigma_ge.re,
            self.sigma_ge.im,
            self.q,
            self.p,
        ]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            a: Complex64::new(y[0], y[1]),
            b: Complex64::new(y[2], y[3]),
            sigma_ge: Complex64::new(y[4], y[5]),
            q: y[6],
            p: y[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Time derivative of the mean-field state for drive amplitude `eta` and
/// rocking offset `rocking`.
pub fn rhs(params: &SystemParams, eta: f64, rocking: f64, s: &MeanFieldState) -> MeanFieldState {
    let p = params;
    let g_om = p.g_om();
    let pump = p.lambda_pump * Complex64::from_polar(1.0, -p.theta) * p.n_inversion;
    let da = -(p.kappa_a + I * p.delta_a) * s.a - I * p.j_coupling * s.b
        + eta
        + I * g_om * s.q * s.a;
    let db = -(p.kappa_b + I * p.delta_b) * s.b - I * p.g_qd * s.sigma_ge - I * p.j_coupling * s.a;
    let ds = -(p.kappa_d + I * p.delta_d) * s.sigma_ge + I * p.g_qd * p.n_inversion * s.b
        - I * pump;
    let dq = p.omega_m * s.p;
    let dp = -p.omega_m * s.q + g_om * (s.a.norm_sqr() + rocking) - p.gamma_m * s.p;
    MeanFieldState {
        a: da,
        b: db,
        sigma_ge: ds,
        q: dq,
        p: dp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_arrays() {
        let s = MeanFieldState {
            a: Complex64::new(1.0, 2.0),
            b: Complex64::new(3.0, 4.0),
            sigma_ge: Complex64::new(5.0, 6.0),
            q: 7.0,
            p: 8.0,
        };
        assert_eq!(MeanFieldState::from_slice(&s.to_array()), s);
        assert_eq!(s.max_abs(), 8.0);
    }

    #[test]
    fn empty_undriven_system_is_at_rest() {
        let mut params = SystemParams::bistable_reference();
        params.n_inversion = 0.0;
        let d = rhs(&params, 0.0, 0.0, &MeanFieldState::zero());
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn inverted_dot_is_pumped_transversally() {
        let mut params = SystemParams::bistable_reference();
        params.n_inversion = 0.5;
        params.theta = 0.0;
        let d = rhs(&params, 0.0, 0.0, &MeanFieldState::zero());
        // -i lambda N
        assert!((d.sigma_ge - Complex64::new(0.0, -0.01)).norm() < 1e-15);
    }
}
