//! Steady states of the mean-field equations.
//!
//! Two independent routes are provided. [`solve_transmitted_power`] eliminates
//! cavity B and the dot analytically and reduces the problem to a cubic in the
//! transmitted power `P = |a_s|^2` (derivation in `docs/cubic_derivation.md`).
//! [`steady_state_direct`] runs damped Newton on the full set of mean-field
//! fixed-point equations and never touches the cubic.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{rhs, MeanFieldState};
use crate::params::{helper_constants, SystemParams};
use crate::poly::{Cubic, RealRoot};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Iteration cap for [`steady_state_direct`].
pub const NEWTON_MAX_ITER: usize = 200;
/// Step halvings allowed per Newton iteration.
pub const NEWTON_MAX_HALVINGS: usize = 40;
/// Required infinity-norm residual of a converged fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub a_s: Complex64,
    pub b_s: Complex64,
    /// Dot coherence <sigma_ge>.
    pub sigma_ge_s: Complex64,
    pub q_s: f64,
    pub p_s: f64,
    pub p_trans: f64,
    pub eff_detuning: f64,
}

impl SteadyState {
    pub fn as_meanfield(&self) -> MeanFieldState {
        MeanFieldState {
            a: self.a_s,
            b: self.b_s,
            sigma_ge: self.sigma_ge_s,
            q: self.q_s,
            p: self.p_s,
        }
    }
}

/// Delta = delta_a - omega_m chi^2 (P + C).
pub fn effective_detuning(params: &SystemParams, p_trans: f64, rocking: f64) -> f64 {
    params.delta_a - params.omega_m * params.chi * params.chi * (p_trans + rocking)
}

/// Coefficients `[c3, c2, c1, c0]` of `c3 P^3 + c2 P^2 + c1 P + c0 = 0`.
///
/// With `A = A1 + i A2`, `D = kappa_d + i delta_d`, `k = omega_m chi^2` and
/// `D0 = delta_a - k C` the steady state obeys
/// `P |(kappa_a + i (D0 - k P)) A + J^2 D|^2 = |eta0 A + i J g lambda e^{-i theta} N|^2`.
pub fn cubic_coefficients(params: &SystemParams, eta0: f64, rocking: f64) -> [f64; 4] {
    let p = params;
    let (a1, a2) = helper_constants(p);
    let a_sq = a1 * a1 + a2 * a2;
    let j2 = p.j_coupling * p.j_coupling;
    let k = p.omega_m * p.chi * p.chi;
    let d0 = p.delta_a - k * rocking;

    // |den|^2 = Delta^2 |A|^2 + 2 Delta J^2 B + X0
    let b = a1 * p.delta_d - a2 * p.kappa_d;
    let re0 = p.kappa_a * a1 + j2 * p.kappa_d;
    let im0 = p.kappa_a * a2 + j2 * p.delta_d;
    let x0 = re0 * re0 + im0 * im0;

    // |numerator|^2
    let pump = p.j_coupling * p.g_qd * p.lambda_pump * p.n_inversion;
    let rhs = eta0 * eta0 * a_sq
        + 2.0 * eta0 * pump * (a1 * p.theta.sin() + a2 * p.theta.cos())
        + pump * pump;

    let c3 = a_sq * k * k;
    let c2 = -2.0 * k * (d0 * a_sq + j2 * b);
    let c1 = d0 * d0 * a_sq + 2.0 * d0 * j2 * b + x0;
    [c3, c2, c1, -rhs]
}

/// Non-negative real roots of the steady-state cubic, ascending.
pub fn solve_transmitted_power(
    params: &SystemParams,
    eta0: f64,
    rocking: f64,
) -> Result<Vec<RealRoot>> {
    let coeffs = cubic_coefficients(params, eta0, rocking);
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateModel(format!(
            "non-finite cubic coefficients {coeffs:?}"
        )));
    }
    let roots = Cubic(coeffs).real_roots()?;
    let top = roots.iter().fold(1.0f64, |m, r| m.max(r.value.abs()));
    let tol = 1e-10 * top;
    Ok(roots
        .into_iter()
        .filter(|r| r.value >= -tol)
        .map(|r| RealRoot {
            value: r.value.max(0.0),
            multiplicity: r.multiplicity,
        })
        .collect())
}

/// Reconstructs the full steady state belonging to a transmitted power.
pub fn steady_state_from_ptrans(
    params: &SystemParams,
    eta0: f64,
    rocking: f64,
    p_trans: f64,
) -> Result<SteadyState> {
    if !(p_trans.is_finite() && p_trans >= 0.0) {
        return Err(Error::InvalidParams {
            field: "p_trans",
            reason: format!("must be finite and >= 0, got {p_trans}"),
        });
    }
    let p = params;
    let (a1, a2) = helper_constants(p);
    let a_c = Complex64::new(a1, a2);
    let d_d = Complex64::new(p.kappa_d, p.delta_d);
    let d_b = Complex64::new(p.kappa_b, p.delta_b);
    let phase = Complex64::from_polar(1.0, -p.theta);
    let n = p.n_inversion;
    let delta = effective_detuning(p, p_trans, rocking);

    let den = (p.kappa_a + I * delta) * a_c + p.j_coupling * p.j_coupling * d_d;
    if den.norm() < 1e-12 {
        return Err(Error::SingularResponse(format!(
            "cavity-A response denominator vanishes at P = {p_trans}"
        )));
    }
    let a_s = (eta0 * a_c + I * p.j_coupling * p.g_qd * p.lambda_pump * phase * n) / den;

    let b_den = d_b - p.g_qd * p.g_qd * n / d_d;
    if b_den.norm() < 1e-12 {
        return Err(Error::SingularResponse(
            "cavity-B dressed response vanishes".into(),
        ));
    }
    let b_s = -(I * p.j_coupling * a_s + p.g_qd * p.lambda_pump * phase * n / d_d) / b_den;
    let sigma_ge_s = I * n * (p.g_qd * b_s - p.lambda_pump * phase) / d_d;

    Ok(SteadyState {
        a_s,
        b_s,
        sigma_ge_s,
        q_s: p.chi * (p_trans + rocking),
        p_s: 0.0,
        p_trans,
        eff_detuning: delta,
    })
}

/// All steady states, one per root of the cubic.
pub fn steady_states(params: &SystemParams, eta0: f64, rocking: f64) -> Result<Vec<SteadyState>> {
    solve_transmitted_power(params, eta0, rocking)?
        .into_iter()
        .map(|r| steady_state_from_ptrans(params, eta0, rocking, r.value))
        .collect()
}

/// Infinity norm of the mean-field time derivative at a candidate state.
pub fn fixed_point_residual(
    params: &SystemParams,
    eta0: f64,
    rocking: f64,
    state: &MeanFieldState,
) -> f64 {
    rhs(params, eta0, rocking, state).max_abs()
}

// Unknowns: [Re a, Im a, Re b, Im b, Re s, Im s, q]; p = 0 is fixed.
type Vec7 = SVector<f64, 7>;
type Mat7 = SMatrix<f64, 7, 7>;

fn pack(s: &MeanFieldState) -> Vec7 {
    Vec7::from([s.a.re, s.a.im, s.b.re, s.b.im, s.sigma_ge.re, s.sigma_ge.im, s.q])
}

fn unpack(x: &Vec7) -> MeanFieldState {
    MeanFieldState {
        a: Complex64::new(x[0], x[1]),
        b: Complex64::new(x[2], x[3]),
        sigma_ge: Complex64::new(x[4], x[5]),
        q: x[6],
        p: 0.0,
    }
}

fn residual(params: &SystemParams, eta0: f64, rocking: f64, x: &Vec7) -> Vec7 {
    let d = rhs(params, eta0, rocking, &unpack(x));
    Vec7::from([d.a.re, d.a.im, d.b.re, d.b.im, d.sigma_ge.re, d.sigma_ge.im, d.p])
}

/// Writes the real 2x2 block of multiplication by `z` at (row, col).
fn put_complex(m: &mut Mat7, row: usize, col: usize, z: Complex64) {
    m[(row, col)] = z.re;
    m[(row, col + 1)] = -z.im;
    m[(row + 1, col)] = z.im;
    m[(row + 1, col + 1)] = z.re;
}

fn jacobian(params: &SystemParams, x: &Vec7) -> Mat7 {
    let p = params;
    let g_om = p.g_om();
    let (ar, ai, q) = (x[0], x[1], x[6]);
    let mut m = Mat7::zeros();
    put_complex(
        &mut m,
        0,
        0,
        Complex64::new(-p.kappa_a, g_om * q - p.delta_a),
    );
    put_complex(&mut m, 0, 2, -I * p.j_coupling);
    // d(i G q a)/dq
    m[(0, 6)] = -g_om * ai;
    m[(1, 6)] = g_om * ar;

    put_complex(&mut m, 2, 2, -(p.kappa_b + I * p.delta_b));
    put_complex(&mut m, 2, 4, -I * p.g_qd);
    put_complex(&mut m, 2, 0, -I * p.j_coupling);

    put_complex(&mut m, 4, 4, -(p.kappa_d + I * p.delta_d));
    put_complex(&mut m, 4, 2, I * p.g_qd * p.n_inversion);

    m[(6, 0)] = 2.0 * g_om * ar;
    m[(6, 1)] = 2.0 * g_om * ai;
    m[(6, 6)] = -p.omega_m;
    m
}

/// Solves the linear cavity-B / dot sub-system for a given cavity-A
/// amplitude. Used only to seed Newton.
fn slave_b_and_sigma(params: &SystemParams, a: Complex64) -> (Complex64, Complex64) {
    let p = params;
    let pump = p.lambda_pump * Complex64::from_polar(1.0, -p.theta) * p.n_inversion;
    // [ kappa_b + i delta_b      i g          ] [b]   [ -i J a      ]
    // [ -i g N                   kappa_d + i delta_d ] [s] = [ -i pump ]
    let m11 = Complex64::new(p.kappa_b, p.delta_b);
    let m12 = I * p.g_qd;
    let m21 = -I * p.g_qd * p.n_inversion;
    let m22 = Complex64::new(p.kappa_d, p.delta_d);
    let r1 = -I * p.j_coupling * a;
    let r2 = -I * pump;
    let det = m11 * m22 - m12 * m21;
    if det.norm() < 1e-14 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    ((r1 * m22 - m12 * r2) / det, (m11 * r2 - m21 * r1) / det)
}

/// Damped Newton on the full fixed-point equations, seeded from a guess for
/// the cavity-A amplitude.
pub fn steady_state_direct(
    params: &SystemParams,
    eta0: f64,
    rocking: f64,
    initial_guess: Complex64,
) -> Result<SteadyState> {
    if !(initial_guess.re.is_finite() && initial_guess.im.is_finite()) {
        return Err(Error::InvalidParams {
            field: "initial_guess",
            reason: "must be finite".into(),
        });
    }
    let (b0, s0) = slave_b_and_sigma(params, initial_guess);
    let mut x = pack(&MeanFieldState {
        a: initial_guess,
        b: b0,
        sigma_ge: s0,
        q: params.chi * (initial_guess.norm_sqr() + rocking),
        p: 0.0,
    });
    let mut f = residual(params, eta0, rocking, &x);
    let mut norm = f.amax();
    let target = 1e-14 * eta0.abs().max(1.0);

    for _ in 0..NEWTON_MAX_ITER {
        if norm <= target {
            break;
        }
        let jac = jacobian(params, &x);
        let Some(step) = jac.lu().solve(&(-f)) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial = x + step * t;
            let f_trial = residual(params, eta0, rocking, &trial);
            let n_trial = f_trial.amax();
            if n_trial.is_finite() && n_trial < norm {
                x = trial;
                f = f_trial;
                norm = n_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if !(norm < FIXED_POINT_TOL) {
        return Err(Error::NoConvergence {
            iterations: NEWTON_MAX_ITER,
            residual: norm,
        });
    }
    let s = unpack(&x);
    let p_trans = s.a.norm_sqr();
    Ok(SteadyState {
        a_s: s.a,
        b_s: s.b,
        sigma_ge_s: s.sigma_ge,
        q_s: s.q,
        p_s: 0.0,
        p_trans,
        eff_detuning: params.delta_a - params.g_om() * s.q,
    })
}
