//! Linearised fluctuation dynamics around a steady state.
//!
//! Fluctuations are ordered `[q, p, u1, v1, u2, v2]` where `(u1, v1)` are the
//! amplitude and phase quadratures of cavity B and `(u2, v2)` those of
//! cavity A. Dot fluctuations are neglected.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::SystemParams;
use crate::steady::SteadyState;

/// Largest eigenvalue real part still counted as stable.
pub const STABILITY_THRESHOLD: f64 = -1e-10;

/// Real optomechanical couplings entering the drift matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationAmplitudes {
    /// omega_m chi (a_s + a_s^*) / sqrt 2
    pub a_plus: f64,
    /// i omega_m chi (a_s - a_s^*) / sqrt 2, real by construction.
    pub a_minus_i: f64,
}

impl FluctuationAmplitudes {
    /// The (purely imaginary) a_- itself.
    pub fn a_minus(&self) -> Complex64 {
        // a_minus_i = i a_-  =>  a_- = -i a_minus_i
        Complex64::new(0.0, -self.a_minus_i)
    }
}

pub fn fluctuation_amplitudes(steady: &SteadyState, params: &SystemParams) -> FluctuationAmplitudes {
    let scale = std::f64::consts::SQRT_2 * params.omega_m * params.chi;
    FluctuationAmplitudes {
        a_plus: scale * steady.a_s.re,
        a_minus_i: -scale * steady.a_s.im,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftMatrix {
    pub m: Matrix6<f64>,
    pub eff_detuning: f64,
    pub amplitudes: FluctuationAmplitudes,
}

impl DriftMatrix {
    pub fn trace(&self) -> f64 {
        self.m.trace()
    }
}

pub fn drift_matrix(params: &SystemParams, steady: &SteadyState) -> DriftMatrix {
    let p = params;
    let amp = fluctuation_amplitudes(steady, p);
    let (ap, ami) = (amp.a_plus, amp.a_minus_i);
    let (wm, j, d, db) = (p.omega_m, p.j_coupling, steady.eff_detuning, p.delta_b);
    #[rustfmt::skip]
    let m = Matrix6::from_row_slice(&[
        0.0,  wm,         0.0,        0.0,        0.0,        0.0,
        -wm,  -p.gamma_m, 0.0,        0.0,        ap,         -ami,
        0.0,  0.0,        -p.kappa_b, db,         0.0,        j,
        0.0,  0.0,        -db,        -p.kappa_b, -j,         0.0,
        ami,  0.0,        0.0,        j,          -p.kappa_a, d,
        ap,   0.0,        -j,         0.0,        -d,         -p.kappa_a,
    ]);
    DriftMatrix {
        m,
        eff_detuning: d,
        amplitudes: amp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Stability,
    pub max_real_part: f64,
    pub eigenvalues: Vec<Complex64>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == Stability::Stable
    }
}

/// Lyapunov stability of the linearised dynamics.
pub fn stability(drift: &DriftMatrix) -> StabilityReport {
    let eig: Vector6<Complex64> = drift.m.complex_eigenvalues();
    let mut eigenvalues: Vec<Complex64> = eig.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let max_real_part = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let verdict = if max_real_part < STABILITY_THRESHOLD {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    StabilityReport {
        verdict,
        max_real_part,
        eigenvalues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::{steady_state_from_ptrans, steady_states};
    use approx::assert_relative_eq;

    fn state_with(a_s: Complex64, params: &SystemParams) -> SteadyState {
        let mut s = steady_state_from_ptrans(params, 0.1, 0.0, 0.0).unwrap();
        s.a_s = a_s;
        s
    }

    #[test]
    fn amplitude_examples() {
        let p = SystemParams::bistable_reference();
        let sq2 = std::f64::consts::SQRT_2;

        let real = fluctuation_amplitudes(&state_with(Complex64::new(0.7, 0.0), &p), &p);
        assert_eq!(real.a_minus_i, 0.0);
        assert_relative_eq!(real.a_plus, sq2 * p.chi * 0.7);

        let imag = fluctuation_amplitudes(&state_with(Complex64::new(0.0, 1.0), &p), &p);
        assert_eq!(imag.a_plus, 0.0);
        assert_relative_eq!(imag.a_minus_i, -sq2 * p.chi);
        // i a_- recovers a_minus_i
        assert!((Complex64::i() * imag.a_minus() - imag.a_minus_i).norm() < 1e-15);

        let no_om = SystemParams { chi: 0.0, ..p };
        let zero = fluctuation_amplitudes(&state_with(Complex64::new(0.3, -0.8), &no_om), &no_om);
        assert_eq!((zero.a_plus, zero.a_minus_i), (0.0, 0.0));
    }

    #[test]
    fn trace_is_sum_of_losses() {
        for (eta0, c) in [(0.1, 0.0), (0.5, 0.36), (0.9, 0.49)] {
            let p = SystemParams::bistable_reference();
            for s in steady_states(&p, eta0, c).unwrap() {
                let m = drift_matrix(&p, &s);
                assert_relative_eq!(
                    m.trace(),
                    -p.gamma_m - 2.0 * p.kappa_a - 2.0 * p.kappa_b,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn decoupled_matrix_is_block_diagonal() {
        let p = SystemParams {
            chi: 0.0,
            j_coupling: 0.0,
            ..SystemParams::bistable_reference()
        };
        let s = steady_states(&p, 0.3, 0.0).unwrap()[0];
        let m = drift_matrix(&p, &s).m;
        let block = |i: usize| i / 2;
        for r in 0..6 {
            for c in 0..6 {
                if block(r) != block(c) {
                    assert_eq!(m[(r, c)], 0.0, "({r},{c})");
                }
            }
        }
        let report = stability(&drift_matrix(&p, &s));
        assert!(report.is_stable());
        // Eigenvalues -kappa +- i Delta and the damped oscillator pair.
        assert_relative_eq!(report.max_real_part, -p.gamma_m / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn printed_entries() {
        let p = SystemParams::bistable_reference();
        let s = steady_states(&p, 0.4, 0.1).unwrap()[0];
        let d = drift_matrix(&p, &s);
        let m = d.m;
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(m[(1, 4)], d.amplitudes.a_plus);
        assert_eq!(m[(1, 5)], -d.amplitudes.a_minus_i);
        assert_eq!(m[(4, 0)], d.amplitudes.a_minus_i);
        assert_eq!(m[(5, 0)], d.amplitudes.a_plus);
        assert_eq!(m[(4, 5)], s.eff_detuning);
        assert_eq!(m[(5, 4)], -s.eff_detuning);
        assert_eq!(m[(2, 3)], p.delta_b);
        assert_eq!(m[(2, 5)], p.j_coupling);
        assert_eq!(m[(3, 4)], -p.j_coupling);
        assert_eq!(m[(4, 3)], p.j_coupling);
        assert_eq!(m[(5, 2)], -p.j_coupling);
        assert!(m.iter().all(|v| v.is_finite()));
    }

    /// Central-difference Jacobian of the mean-field flow over
    /// `[q, p, b, a]` with the dot coherence frozen, in quadrature scaling
    /// `u = sqrt2 Re`, `v = sqrt2 Im`.
    fn numerical_drift(p: &SystemParams, s: &SteadyState, eta0: f64, c: f64) -> Matrix6<f64> {
        use crate::meanfield::{rhs, MeanFieldState};
        let sq2 = std::f64::consts::SQRT_2;
        let to_vec = |m: &MeanFieldState| {
            Vector6::new(m.q, m.p, sq2 * m.b.re, sq2 * m.b.im, sq2 * m.a.re, sq2 * m.a.im)
        };
        let perturb = |k: usize, h: f64| {
            let mut m = s.as_meanfield();
            match k {
                0 => m.q += h,
                1 => m.p += h,
                2 => m.b.re += h / sq2,
                3 => m.b.im += h / sq2,
                4 => m.a.re += h / sq2,
                _ => m.a.im += h / sq2,
            }
            to_vec(&rhs(p, eta0, c, &m))
        };
        let h = 1e-6;
        let mut jac = Matrix6::zeros();
        for k in 0..6 {
            jac.set_column(k, &((perturb(k, h) - perturb(k, -h)) / (2.0 * h)));
        }
        jac
    }

    #[test]
    fn matches_jacobian_of_mean_field_flow() {
        let base = SystemParams::bistable_reference();
        for (eta0, c, theta) in [(0.3, 0.1, 0.238), (0.6, 0.36, 1.0), (0.8, 0.49, -0.4)] {
            let p = SystemParams { theta, ..base };
            for s in steady_states(&p, eta0, c).unwrap() {
                let analytic = drift_matrix(&p, &s).m;
                let numeric = numerical_drift(&p, &s, eta0, c);
                let err = (analytic - numeric).abs().max();
                assert!(err < 1e-7, "eta0={eta0} C={c}: max deviation {err:e}");
            }
        }
    }

    #[test]
    fn bistable_branches_classified() {
        // Lower branch stable, middle branch a saddle with one real
        // positive eigenvalue.
        let p = SystemParams::bistable_reference();
        let s = steady_states(&p, 0.3f64.sqrt(), 0.1).unwrap();
        assert_eq!(s.len(), 3);
        assert!(stability(&drift_matrix(&p, &s[0])).is_stable());
        let middle = stability(&drift_matrix(&p, &s[1]));
        assert!(!middle.is_stable());
        let positive: Vec<_> = middle.eigenvalues.iter().filter(|z| z.re > 0.0).collect();
        assert_eq!(positive.len(), 1);
        assert!(positive[0].im.abs() < 1e-12);
    }

    #[test]
    fn zero_couplings_are_stable() {
        let p = SystemParams {
            chi: 0.0,
            j_coupling: 0.0,
            g_qd: 0.0,
            lambda_pump: 0.0,
            ..SystemParams::bistable_reference()
        };
        let s = steady_states(&p, 0.0, 0.0).unwrap()[0];
        assert!(stability(&drift_matrix(&p, &s)).is_stable());
    }
}
