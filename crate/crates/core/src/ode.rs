//! Adaptive integration of `y' = f(t, y)` on fixed-size real states.
//!
//! The explicit Dormand–Prince 5(4) pair runs by default. Its stability
//! boundary is monitored with Hairer's estimate of `h * |lambda|`; after
//! [`STIFF_STEPS`] consecutive accepted steps beyond [`STIFF_LIMIT`] the
//! remaining interval is handed to the linearly implicit Rosenbrock 2(3)
//! scheme of Shampine and Reichelt, with a finite-difference Jacobian.
//!
//! Steps are shortened to land exactly on every requested sample time, so
//! samples are integrator states rather than interpolants and identical
//! inputs give bit-identical outputs.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hairer's bound on `h * |lambda|` for the Dormand–Prince pair.
pub const STIFF_LIMIT: f64 = 3.25;
pub const STIFF_STEPS: usize = 15;
/// Consecutive non-stiff steps that clear the stiffness count.
pub const CALM_STEPS: usize = 6;
/// States with a component above this magnitude count as diverged.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Disable to force the explicit pair throughout.
    pub stiffness_switch: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 50_000_000,
            stiffness_switch: true,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-2,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DormandPrince,
    Rosenbrock,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Time at which the implicit scheme took over, if it did.
    pub implicit_from: Option<f64>,
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Integrator<'a, const N: usize, F> {
    f: F,
    opts: &'a OdeOptions,
    stats: OdeStats,
}

impl<'a, const N: usize, F> Integrator<'a, N, F>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    fn eval(&mut self, t: f64, y: &SVector<f64, N>) -> SVector<f64, N> {
        self.stats.evaluations += 1;
        (self.f)(t, y)
    }

    fn error_norm(&self, err: &SVector<f64, N>, y0: &SVector<f64, N>, y1: &SVector<f64, N>) -> f64 {
        let mut sum = 0.0;
        for i in 0..N {
            let sc = self.opts.atol + self.opts.rtol * y0[i].abs().max(y1[i].abs());
            sum += (err[i] / sc).powi(2);
        }
        (sum / N as f64).sqrt()
    }

    fn initial_step(&mut self, t: f64, y: &SVector<f64, N>, k1: &SVector<f64, N>, span: f64) -> f64 {
        let sc = y.map(|v| self.opts.atol + self.opts.rtol * v.abs());
        let d0 = (y.component_div(&sc).norm_squared() / N as f64).sqrt();
        let d1 = (k1.component_div(&sc).norm_squared() / N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = y + k1 * h0;
        let k2 = self.eval(t + h0, &y1);
        let d2 = ((k2 - k1).component_div(&sc).norm_squared() / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// One Dormand–Prince attempt: `(y_new, k_new, error, h*|lambda|)`.
    fn dp_step(
        &mut self,
        t: f64,
        y: &SVector<f64, N>,
        k1: &SVector<f64, N>,
        h: f64,
    ) -> (SVector<f64, N>, SVector<f64, N>, f64, f64) {
        let k2 = self.eval(t + C2 * h, &(y + k1 * (h * A21)));
        let k3 = self.eval(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h));
        let k4 = self.eval(t + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h));
        let k5 = self.eval(
            t + C5 * h,
            &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h),
        );
        let y_stage6 = y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h;
        let k6 = self.eval(t + h, &y_stage6);
        let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
        let k7 = self.eval(t + h, &y_new);
        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let err_norm = self.error_norm(&err, y, &y_new);
        let num = (k7 - k6).norm_squared();
        let den = (y_new - y_stage6).norm_squared();
        let h_lambda = if den > 0.0 { h * (num / den).sqrt() } else { 0.0 };
        (y_new, k7, err_norm, h_lambda)
    }

    fn jacobian(&mut self, t: f64, y: &SVector<f64, N>, fy: &SVector<f64, N>) -> SMatrix<f64, N, N> {
        let mut jac = SMatrix::<f64, N, N>::zeros();
        for j in 0..N {
            let dy = f64::EPSILON.sqrt() * y[j].abs().max(1e-5);
            let mut yp = *y;
            yp[j] += dy;
            let col = (self.eval(t, &yp) - fy) / dy;
            jac.set_column(j, &col);
        }
        jac
    }

    /// One Rosenbrock 2(3) attempt: `(y_new, f(t+h, y_new), error)`.
    fn rosenbrock_step(
        &mut self,
        t: f64,
        y: &SVector<f64, N>,
        f0: &SVector<f64, N>,
        jac: &SMatrix<f64, N, N>,
        dfdt: &SVector<f64, N>,
        h: f64,
    ) -> Option<(SVector<f64, N>, SVector<f64, N>, f64)> {
        let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
        let e32 = 6.0 + std::f64::consts::SQRT_2;
        let w = SMatrix::<f64, N, N>::identity() - jac * (h * d);
        let lu = DMatrix::from_column_slice(N, N, w.as_slice()).lu();
        let solve = |rhs: SVector<f64, N>| {
            lu.solve(&DVector::from_column_slice(rhs.as_slice()))
                .map(|x| SVector::<f64, N>::from_column_slice(x.as_slice()))
        };
        let k1 = solve(f0 + dfdt * (h * d))?;
        let f1 = self.eval(t + 0.5 * h, &(y + k1 * (0.5 * h)));
        let k2 = solve(f1 - k1)? + k1;
        let y_new = y + k2 * h;
        let f2 = self.eval(t + h, &y_new);
        let k3 = solve(f2 - (k2 - f1) * e32 - (k1 - f0) * 2.0 + dfdt * (h * d))?;
        let err = (k1 - k2 * 2.0 + k3) * (h / 6.0);
        Some((y_new, f2, self.error_norm(&err, y, &y_new)))
    }
}

fn check_state<const N: usize>(y: &SVector<f64, N>) -> bool {
    y.iter().all(|v| v.is_finite() && v.abs() < BLOWUP_LIMIT)
}

/// Integrates from `(t0, y0)` and returns the state at every entry of
/// `sample_times` (ascending, all `>= t0`).
pub fn solve<const N: usize, F>(
    f: F,
    t0: f64,
    y0: SVector<f64, N>,
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<SVector<f64, N>>, OdeStats)>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    if sample_times.windows(2).any(|w| !(w[1] > w[0])) || sample_times.first().is_some_and(|&s| s < t0) {
        return Err(Error::IntegrationFailure {
            t_last: t0,
            reason: "sample times must be ascending and not before the start".into(),
        });
    }
    if !check_state(&y0) {
        return Err(Error::IntegrationFailure {
            t_last: t0,
            reason: "initial state is not finite".into(),
        });
    }
    let mut ig = Integrator {
        f,
        opts,
        stats: OdeStats::default(),
    };
    let mut out = Vec::with_capacity(sample_times.len());
    let mut t = t0;
    let mut y = y0;
    let mut samples = sample_times.iter().copied().peekable();
    while samples.peek() == Some(&t0) {
        out.push(y);
        samples.next();
    }
    let Some(&t_end) = sample_times.last() else {
        return Ok((out, ig.stats));
    };
    if t_end == t0 {
        return Ok((out, ig.stats));
    }

    let mut k = ig.eval(t, &y);
    let mut h = ig.initial_step(t, &y, &k, t_end - t0);
    let mut method = Method::DormandPrince;
    let mut stiff_count = 0usize;
    let mut calm_count = 0usize;
    let mut steps = 0usize;

    while let Some(&target) = samples.peek() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::IntegrationFailure {
                t_last: t,
                reason: format!("exceeded {} steps", opts.max_steps),
            });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::IntegrationFailure {
                t_last: t,
                reason: format!("step size collapsed to {h:e}"),
            });
        }
        let lands = t + h >= target;
        let h_try = if lands { target - t } else { h };

        let (y_new, k_new, err, h_lambda) = match method {
            Method::DormandPrince => ig.dp_step(t, &y, &k, h_try),
            Method::Rosenbrock => {
                let jac = ig.jacobian(t, &y, &k);
                let dt = f64::EPSILON.sqrt() * t.abs().max(1.0);
                let dfdt = (ig.eval(t + dt, &y) - k) / dt;
                match ig.rosenbrock_step(t, &y, &k, &jac, &dfdt, h_try) {
                    Some((yn, kn, e)) => (yn, kn, e, 0.0),
                    None => (y, k, f64::INFINITY, 0.0),
                }
            }
        };

        if err.is_finite() && err <= 1.0 && check_state(&y_new) {
            ig.stats.accepted += 1;
            t = if lands { target } else { t + h_try };
            y = y_new;
            k = k_new;
            if lands {
                out.push(y);
                samples.next();
            }
            let factor = match method {
                Method::DormandPrince => 0.9 * err.max(1e-10).powf(-0.2),
                Method::Rosenbrock => 0.8 * err.max(1e-10).powf(-1.0 / 3.0),
            };
            h = h.max(h_try) * factor.clamp(0.2, 5.0);
            if method == Method::DormandPrince && opts.stiffness_switch {
                if h_lambda > STIFF_LIMIT {
                    calm_count = 0;
                    stiff_count += 1;
                    if stiff_count >= STIFF_STEPS {
                        log::info!("stiffness detected at t = {t}; switching to Rosenbrock");
                        method = Method::Rosenbrock;
                        ig.stats.implicit_from = Some(t);
                    }
                } else {
                    calm_count += 1;
                    if calm_count >= CALM_STEPS {
                        stiff_count = 0;
                    }
                }
            }
        } else {
            ig.stats.rejected += 1;
            if !check_state(&y_new) && err <= 1.0 {
                return Err(Error::IntegrationFailure {
                    t_last: t,
                    reason: "state diverged".into(),
                });
            }
            let shrink = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.5)
            } else {
                0.1
            };
            h = h_try * shrink;
        }
    }
    Ok((out, ig.stats))
}
