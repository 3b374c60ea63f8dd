//! Closed-form displacement spectrum
//! `S_q = (|K1|^2 + ... + |K5|^2) / |Dd|^2`.
//!
//! The coefficient polynomials are kept exactly as transcribed, including
//! terms that look like typos (`a+ kappa_b^2 Delta` with a single power of
//! `a+`, `J^2 a-^2 Delta_b^2` against `J^2 a+^2 Delta_b`). The matrix route in
//! [`crate::spectrum`] is authoritative; [`audit_closed_form`] measures the gap.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::fluctuation_amplitudes;
use crate::noise::NoiseModel;
use crate::params::SystemParams;
use crate::spectrum::{spectrum_matrix, SpectrumSeries};
use crate::steady::SteadyState;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative deviation above which an audit sample is flagged.
pub const AUDIT_FLAG_LEVEL: f64 = 0.01;

/// Thermal factor multiplying the mechanical-noise coefficient `K1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalFactor {
    /// `gamma_m coth(hbar w / 2 k_B T)`, diverging at `w = 0`.
    Printed,
    /// `sqrt((gamma_m / omega_m) w coth(hbar w / 2 k_B T))`, the amplitude
    /// of the symmetrised Brownian correlation.
    SymmetrizedBrownian,
}

impl ThermalFactor {
    pub fn value(self, noise: &NoiseModel, omega: f64) -> f64 {
        match self {
            ThermalFactor::Printed => {
                noise.gamma_m / (0.5 * noise.thermal_ratio * omega).tanh()
            }
            ThermalFactor::SymmetrizedBrownian => {
                (noise.gamma_m / noise.omega_m * noise.thermal_even_part(omega)).sqrt()
            }
        }
    }
}

/// Inputs of the closed form at one steady state.
#[derive(Debug, Clone, Copy)]
struct Coeffs {
    j: f64,
    ka: f64,
    kb: f64,
    d: f64,
    db: f64,
    wm: f64,
    gm: f64,
    ap: Complex64,
    am: Complex64,
}

impl Coeffs {
    fn new(params: &SystemParams, steady: &SteadyState) -> Self {
        let amp = fluctuation_amplitudes(steady, params);
        Self {
            j: params.j_coupling,
            ka: params.kappa_a,
            kb: params.kappa_b,
            d: steady.eff_detuning,
            db: params.delta_b,
            wm: params.omega_m,
            gm: params.gamma_m,
            ap: Complex64::new(amp.a_plus, 0.0),
            am: amp.a_minus(),
        }
    }
}

/// Polynomial multiplying `(-i w - gamma_m)` in `Dd`.
fn dd_first(c: &Coeffs, w: f64) -> Complex64 {
    let Coeffs { j, ka, kb, d, db, .. } = *c;
    let (j2, j4) = (j * j, j.powi(4));
    let (w2, w3, w4, w5) = (w * w, w.powi(3), w.powi(4), w.powi(5));
    let (ka2, kb2, d2, db2) = (ka * ka, kb * kb, d * d, db * db);
    -I * j4 * w + 2.0 * I * j2 * w3 - I * w5 + 2.0 * j2 * w2 * ka - 2.0 * w4 * ka
        + I * w3 * ka2
        + 2.0 * j2 * w2 * kb
        - 2.0 * w4 * kb
        - 2.0 * I * j2 * w * ka * kb
        + 4.0 * I * w3 * ka * kb
        + 2.0 * w2 * ka2 * kb
        + I * w3 * kb2
        + 2.0 * w2 * ka * kb2
        - I * w * ka2 * kb2
        + I * w3 * d2
        + 2.0 * w2 * kb * d2
        - I * w * kb2 * d2
        + 2.0 * I * j2 * w * d * db
        + I * w3 * db2
        + 2.0 * w2 * ka * db2
        - I * w * ka2 * db2
        - I * w * d2 * db2
}

/// The optical part of the polynomial multiplying `-omega_m` in `Dd`; also
/// the polynomial part of `K1`.
fn k1_core(c: &Coeffs, w: f64) -> Complex64 {
    let Coeffs { j, ka, kb, d, db, wm, .. } = *c;
    let (j2, j4) = (j * j, j.powi(4));
    let (w2, w3, w4) = (w * w, w.powi(3), w.powi(4));
    let (ka2, kb2, d2, db2) = (ka * ka, kb * kb, d * d, db * db);
    Complex64::from(-j4 * wm) + 2.0 * j2 * w2 * wm - w4 * wm - 2.0 * I * j2 * w * ka * wm
        + 2.0 * I * w3 * ka * wm
        + w2 * ka2 * wm
        - 2.0 * I * j2 * w * kb * wm
        + 2.0 * I * w3 * kb * wm
        - 2.0 * j2 * ka * kb * wm
        + 4.0 * w2 * ka * kb * wm
        - 2.0 * I * w * ka2 * kb * wm
        + w2 * kb2 * wm
        - 2.0 * I * w * ka * kb2 * wm
        - ka2 * kb2 * wm
        + w2 * wm * d2
        - 2.0 * I * w * kb * wm * d2
        - kb2 * wm * d2
        + 2.0 * j2 * wm * d * db
        + w2 * wm * db2
        - 2.0 * I * w * ka * wm * db2
        - ka2 * wm * db2
        - wm * d2 * db2
}

/// Optomechanical terms of the second `Dd` polynomial.
fn dd_second_coupling(c: &Coeffs, w: f64) -> Complex64 {
    let Coeffs { j, kb, d, db, ap, am, .. } = *c;
    let (j2, w2, kb2, db2) = (j * j, w * w, kb * kb, db * db);
    let (ap2, am2) = (ap * ap, am * am);
    w2 * am2 * d - w2 * ap2 * d - 2.0 * I * w * am2 * kb * d + 2.0 * I * w * ap2 * kb * d
        - am2 * kb2 * d
        + ap * kb2 * d
        + j2 * am2 * db2
        - j2 * ap2 * db
        - am2 * d * db2
        + ap2 * d * db2
}

fn dd(c: &Coeffs, w: f64) -> (Complex64, f64) {
    let first = Complex64::new(-c.gm, -w) * dd_first(c, w);
    let second = c.wm * (k1_core(c, w) + dd_second_coupling(c, w));
    let scale = first.norm().max(second.norm());
    (first - second, scale)
}

fn k2(c: &Coeffs, w: f64) -> Complex64 {
    let Coeffs { j, ka, kb, d, db, wm, ap, am, .. } = *c;
    let (j3, w2) = (j.powi(3), w * w);
    (-I * j3 * am * wm + I * j * w2 * am * wm + j * w * am * ka * wm + j * w * am * kb * wm
        - I * j * am * ka * kb * wm
        + I * j * w * ap * wm * d
        + j * ap * kb * wm * d
        + I * j * w * ap * wm * db
        + j * ap * ka * wm * db
        + I * j * am * wm * d * db)
        * kb.sqrt()
}

fn k3(c: &Coeffs, w: f64) -> Complex64 {
    let Coeffs { j, ka, kb, d, db, wm, ap, am, .. } = *c;
    let (j3, w2) = (j.powi(3), w * w);
    (-j3 * ap * wm + j * w2 * ap * wm - I * j * w * ap * ka * wm - I * j * w * ap * kb * wm
        - j * ap * ka * kb * wm
        + j * w * am * wm * d
        - I * j * am * kb * wm * d
        + j * w * am * wm * db
        - I * j * am * ka * wm * db
        + j * ap * wm * d * db)
        * kb.sqrt()
}

fn k4(c: &Coeffs, w: f64) -> Complex64 {
    let Coeffs { j, ka, kb, d, db, wm, ap, am, .. } = *c;
    let (j2, w2, w3, kb2, db2) = (j * j, w * w, w.powi(3), kb * kb, db * db);
    (-I * j2 * w * ap * wm + I * w3 * ap * wm + w2 * ap * ka * wm - j2 * ap * kb * wm
        + 2.0 * w2 * ap * kb * wm
        - 2.0 * I * w * ap * ka * kb * wm
        - I * w * ap * kb2 * wm
        - ap * ka * kb2 * wm
        + I * w2 * am * wm * d
        + 2.0 * w * am * kb * wm * d
        - I * am * kb2 * wm * d
        + I * j2 * am * wm * db
        - I * w * ap * wm * db2
        - ap * ka * wm * db2
        - I * am * wm * d * db2)
        * ka.sqrt()
}

fn k5(c: &Coeffs, w: f64) -> Complex64 {
    let Coeffs { j, ka, kb, d, db, wm, ap, am, .. } = *c;
    let (j2, w2, kb2, db2) = (j * j, w * w, kb * kb, db * db);
    let coupling = wm
        * (ap * (-w2 * d + 2.0 * I * w * kb * d + kb2 * d - j2 * db + d * db2)
            + I * am * (-j * (I * j * w + j * kb)));
    let cavity = Complex64::new(-ka, -w) * (-w2 + 2.0 * I * w * kb + kb2 + db2);
    coupling + cavity * ka.sqrt()
}

/// `K1` polynomial without its thermal factor.
pub fn k1_polynomial(params: &SystemParams, steady: &SteadyState, omega: f64) -> Complex64 {
    k1_core(&Coeffs::new(params, steady), omega)
}

/// The closed-form denominator `Dd(w)`.
pub fn denominator(params: &SystemParams, steady: &SteadyState, omega: f64) -> Complex64 {
    dd(&Coeffs::new(params, steady), omega).0
}

/// `[K1, ..., K5]` at one frequency.
pub fn numerators(
    params: &SystemParams,
    steady: &SteadyState,
    noise: &NoiseModel,
    thermal: ThermalFactor,
    omega: f64,
) -> [Complex64; 5] {
    let c = Coeffs::new(params, steady);
    [
        k1_core(&c, omega) * thermal.value(noise, omega),
        k2(&c, omega),
        k3(&c, omega),
        k4(&c, omega),
        k5(&c, omega),
    ]
}

fn closed_form_value(
    c: &Coeffs,
    noise: &NoiseModel,
    thermal: ThermalFactor,
    omega: f64,
) -> Result<f64> {
    let (den, scale) = dd(c, omega);
    if !(den.norm() >= 1e-14 * scale) || scale == 0.0 {
        return Err(Error::SingularDenominator { omega });
    }
    let k1 = k1_core(c, omega) * thermal.value(noise, omega);
    let num = k1.norm_sqr()
        + k2(c, omega).norm_sqr()
        + k3(c, omega).norm_sqr()
        + k4(c, omega).norm_sqr()
        + k5(c, omega).norm_sqr();
    let value = num / den.norm_sqr();
    if !value.is_finite() {
        return Err(Error::NonPhysicalSpectrum(format!(
            "closed form is not finite at w = {omega}"
        )));
    }
    Ok(value)
}

/// Displacement spectrum through the closed form.
pub fn spectrum_closed_form(
    params: &SystemParams,
    steady: &SteadyState,
    noise: &NoiseModel,
    omega_grid: &[f64],
    thermal: ThermalFactor,
) -> Result<SpectrumSeries> {
    crate::spectrum::require_stable(&crate::linear::drift_matrix(params, steady))?;
    let c = Coeffs::new(params, steady);
    let s_q = omega_grid
        .iter()
        .map(|&w| closed_form_value(&c, noise, thermal, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSeries::from_values(omega_grid.to_vec(), s_q, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSample {
    pub omega: f64,
    pub matrix: f64,
    pub closed_form: f64,
    pub rel_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormAudit {
    pub thermal: ThermalFactor,
    pub samples: Vec<AuditSample>,
    pub max_rel_deviation: f64,
    /// Samples whose deviation exceeds [`AUDIT_FLAG_LEVEL`].
    pub flagged: usize,
    /// Peak positions of each route.
    pub matrix_peaks: Vec<f64>,
    pub closed_form_peaks: Vec<f64>,
}

impl ClosedFormAudit {
    /// Same number of peaks, each within `tol` of its partner.
    pub fn peaks_agree(&self, tol: f64) -> bool {
        self.matrix_peaks.len() == self.closed_form_peaks.len()
            && self
                .matrix_peaks
                .iter()
                .zip(&self.closed_form_peaks)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Evaluates both routes on `omega_grid` and records their per-frequency
/// relative deviation `|closed - matrix| / matrix`.
pub fn audit_closed_form(
    params: &SystemParams,
    steady: &SteadyState,
    noise: &NoiseModel,
    omega_grid: &[f64],
    thermal: ThermalFactor,
) -> Result<ClosedFormAudit> {
    let reference = spectrum_matrix(params, steady, noise, omega_grid)?;
    let closed = spectrum_closed_form(params, steady, noise, omega_grid, thermal)?;
    let samples: Vec<AuditSample> = omega_grid
        .iter()
        .zip(reference.s_q.iter().zip(&closed.s_q))
        .map(|(&omega, (&m, &c))| AuditSample {
            omega,
            matrix: m,
            closed_form: c,
            rel_deviation: (c - m).abs() / m.abs(),
        })
        .collect();
    let mut flagged = 0;
    for s in samples.iter().filter(|s| !(s.rel_deviation <= AUDIT_FLAG_LEVEL)) {
        flagged += 1;
        log::debug!(
            "closed form deviates at w = {:.6}: matrix {:.6e}, closed {:.6e} ({:.3e} relative)",
            s.omega,
            s.matrix,
            s.closed_form,
            s.rel_deviation
        );
    }
    if flagged > 0 {
        log::warn!(
            "closed form ({thermal:?}) deviates by more than {AUDIT_FLAG_LEVEL} at {flagged} of {} frequencies",
            samples.len()
        );
    }
    let max_rel_deviation = samples
        .iter()
        .map(|s| s.rel_deviation)
        .fold(0.0f64, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) });
    Ok(ClosedFormAudit {
        thermal,
        samples,
        max_rel_deviation,
        flagged,
        matrix_peaks: reference.peaks.iter().map(|p| p.position).collect(),
        closed_form_peaks: closed.peaks.iter().map(|p| p.position).collect(),
    })
}
