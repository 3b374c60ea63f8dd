//! Physical parameters of the two-cavity / quantum-dot / mirror system.
//!
//! Every rate and detuning is measured in units of the mechanical frequency,
//! so `omega_m` is 1 for all presets shipped here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates, detunings and couplings of the hybrid system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical frequency (the unit of every other rate).
    pub omega_m: f64,
    /// Field decay rate of the optomechanical cavity A.
    pub kappa_a: f64,
    /// Field decay rate of cavity B (the one hosting the dot).
    pub kappa_b: f64,
    /// Spontaneous-emission decay rate of the dot.
    pub kappa_d: f64,
    /// Mechanical damping rate.
    pub gamma_m: f64,
    /// Cavity-A detuning from the pump.
    pub delta_a: f64,
    /// Cavity-B detuning from the pump.
    pub delta_b: f64,
    /// Dot detuning from its transverse pump.
    pub delta_d: f64,
    /// Photon hopping between the cavities.
    pub j_coupling: f64,
    /// Dot–photon coupling.
    pub g_qd: f64,
    /// Rescaled optomechanical coupling G / omega_m.
    pub chi: f64,
    /// Transverse-pump coupling of the dot.
    pub lambda_pump: f64,
    /// Relative phase of the two lasers, in radians.
    pub theta: f64,
    /// Population inversion, held fixed.
    pub n_inversion: f64,
    /// hbar omega_m / (k_B T).
    pub thermal_ratio: f64,
}

/// Names accepted by [`SystemParams::get`] and [`SystemParams::set`].
pub const PARAM_NAMES: [&str; 15] = [
    "omega_m",
    "kappa_a",
    "kappa_b",
    "kappa_d",
    "gamma_m",
    "delta_a",
    "delta_b",
    "delta_d",
    "j_coupling",
    "g_qd",
    "chi",
    "lambda_pump",
    "theta",
    "n_inversion",
    "thermal_ratio",
];

impl SystemParams {
    /// Parameter set used for the bistability curves (J = 0.5, chi = 0.3,
    /// equal dot populations).
    ///
    /// The mechanical damping is not part of that set; 0.1 omega_m is used.
    pub fn bistable_reference() -> Self {
        Self {
            omega_m: 1.0,
            kappa_a: 0.1,
            kappa_b: 0.1,
            kappa_d: 1.8,
            gamma_m: 0.1,
            delta_a: 1.0,
            delta_b: 1.0,
            delta_d: 0.0,
            j_coupling: 0.5,
            g_qd: 1.0,
            chi: 0.3,
            lambda_pump: 0.02,
            theta: 0.238,
            n_inversion: 0.0,
            thermal_ratio: 1e-6,
        }
    }

    /// Switching parameter set with J = omega_m and g = 0.5 omega_m. This set
    /// quotes gamma_m = 1.8 omega_m and no kappa_d; kappa_d falls back to 1.8.
    pub fn switching_strong_hopping() -> Self {
        Self {
            j_coupling: 1.0,
            g_qd: 0.5,
            gamma_m: 1.8,
            ..Self::bistable_reference()
        }
    }

    /// Switching parameter set with J = 0.5 omega_m and g = omega_m.
    pub fn switching_weak_hopping() -> Self {
        Self::bistable_reference()
    }

    /// Parameter set for the displacement spectra: chi = 0.2, dot detuned by
    /// -omega_m, hbar omega_m / k_B T = 1e-6.
    pub fn spectrum_reference(j_coupling: f64, chi: f64) -> Self {
        Self {
            j_coupling,
            chi,
            delta_d: -1.0,
            ..Self::bistable_reference()
        }
    }

    /// Checks every documented invariant.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_m", self.omega_m),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("kappa_d", self.kappa_d),
            ("gamma_m", self.gamma_m),
            ("thermal_ratio", self.thermal_ratio),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        let non_negative = [
            ("j_coupling", self.j_coupling),
            ("g_qd", self.g_qd),
            ("chi", self.chi),
        ];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("must be finite and >= 0, got {value}"),
                });
            }
        }
        let finite = [
            ("delta_a", self.delta_a),
            ("delta_b", self.delta_b),
            ("delta_d", self.delta_d),
            ("lambda_pump", self.lambda_pump),
            ("theta", self.theta),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("must be finite, got {value}"),
                });
            }
        }
        if !(self.n_inversion.is_finite() && (-1.0..=1.0).contains(&self.n_inversion)) {
            return Err(Error::InvalidParams {
                field: "n_inversion",
                reason: format!("must lie in [-1, 1], got {}", self.n_inversion),
            });
        }
        Ok(())
    }

    /// Dimensionful optomechanical coupling G = omega_m * chi.
    pub fn g_om(&self) -> f64 {
        self.omega_m * self.chi
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "omega_m" => self.omega_m,
            "kappa_a" => self.kappa_a,
            "kappa_b" => self.kappa_b,
            "kappa_d" => self.kappa_d,
            "gamma_m" => self.gamma_m,
            "delta_a" => self.delta_a,
            "delta_b" => self.delta_b,
            "delta_d" => self.delta_d,
            "j_coupling" => self.j_coupling,
            "g_qd" => self.g_qd,
            "chi" => self.chi,
            "lambda_pump" => self.lambda_pump,
            "theta" => self.theta,
            "n_inversion" => self.n_inversion,
            "thermal_ratio" => self.thermal_ratio,
            _ => return None,
        })
    }

    /// Sets a field by name; returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "omega_m" => &mut self.omega_m,
            "kappa_a" => &mut self.kappa_a,
            "kappa_b" => &mut self.kappa_b,
            "kappa_d" => &mut self.kappa_d,
            "gamma_m" => &mut self.gamma_m,
            "delta_a" => &mut self.delta_a,
            "delta_b" => &mut self.delta_b,
            "delta_d" => &mut self.delta_d,
            "j_coupling" => &mut self.j_coupling,
            "g_qd" => &mut self.g_qd,
            "chi" => &mut self.chi,
            "lambda_pump" => &mut self.lambda_pump,
            "theta" => &mut self.theta,
            "n_inversion" => &mut self.n_inversion,
            "thermal_ratio" => &mut self.thermal_ratio,
            _ => return false,
        };
        *slot = value;
        true
    }
}

/// Pump amplitude eta(t) = eta0 + p_amp cos(omega_mod t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub eta0: f64,
    pub p_amp: f64,
    pub omega_mod: f64,
}

impl DriveConfig {
    pub fn constant(eta0: f64) -> Self {
        Self {
            eta0,
            p_amp: 0.0,
            omega_mod: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta0.is_finite() {
            return Err(Error::InvalidDrive(format!("eta0 must be finite, got {}", self.eta0)));
        }
        if !(self.p_amp.is_finite() && self.p_amp >= 0.0) {
            return Err(Error::InvalidDrive(format!(
                "p_amp must be finite and >= 0, got {}",
                self.p_amp
            )));
        }
        if !self.omega_mod.is_finite() || self.omega_mod < 0.0 {
            return Err(Error::InvalidDrive(format!(
                "omega_mod must be finite and >= 0, got {}",
                self.omega_mod
            )));
        }
        if self.p_amp > 0.0 && self.omega_mod == 0.0 {
            return Err(Error::InvalidDrive(
                "modulated drive (p_amp > 0) needs omega_mod > 0".into(),
            ));
        }
        Ok(())
    }

    /// Input power eta0^2.
    pub fn input_power(&self) -> f64 {
        self.eta0 * self.eta0
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_mod
    }
}

/// Rocking parameter C = p_amp^2 / (2 omega_mod^2).
pub fn rocking_parameter(drive: &DriveConfig) -> Result<f64> {
    if drive.p_amp == 0.0 {
        return Ok(0.0);
    }
    drive.validate()?;
    Ok(drive.p_amp * drive.p_amp / (2.0 * drive.omega_mod * drive.omega_mod))
}

/// Drive amplitude at time `t`.
pub fn drive_value(t: f64, drive: &DriveConfig) -> f64 {
    drive.eta0 + drive.p_amp * (drive.omega_mod * t).cos()
}

/// Real and imaginary parts of (kappa_b + i Delta_b)(kappa_d + i Delta_d) - g^2 N.
pub fn helper_constants(params: &SystemParams) -> (f64, f64) {
    let p = params;
    let a1 = -p.g_qd * p.g_qd * p.n_inversion + p.kappa_b * p.kappa_d - p.delta_b * p.delta_d;
    let a2 = p.delta_b * p.kappa_d + p.kappa_b * p.delta_d;
    (a1, a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rocking_examples() {
        let d = |p_amp, omega_mod| DriveConfig {
            eta0: 0.1,
            p_amp,
            omega_mod,
        };
        assert_eq!(rocking_parameter(&d(0.0, 1.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(rocking_parameter(&d(1.0, 1.0)).unwrap(), 0.5);
        // 0.6^2 / (2 * 0.707^2) = 0.36015...
        assert_abs_diff_eq!(rocking_parameter(&d(0.6, 0.707)).unwrap(), 0.36, epsilon = 5e-4);
        assert_abs_diff_eq!(
            rocking_parameter(&d(0.6, 0.5f64.sqrt())).unwrap(),
            0.36,
            epsilon = 1e-14
        );
        assert!(matches!(rocking_parameter(&d(0.3, 0.0)), Err(Error::InvalidDrive(_))));
        // Unmodulated drive needs no frequency.
        assert_eq!(rocking_parameter(&d(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn helper_constant_examples() {
        let (a1, a2) = helper_constants(&SystemParams::bistable_reference());
        assert_abs_diff_eq!(a1, 0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(a2, 1.8, epsilon = 1e-15);

        let mut p = SystemParams::bistable_reference();
        p.g_qd = 0.0;
        p.n_inversion = 0.0;
        p.kappa_b = 1.0;
        p.kappa_d = 1.0;
        p.delta_b = 0.0;
        p.delta_d = 0.0;
        assert_eq!(helper_constants(&p), (1.0, 0.0));

        // Decay rates of zero are outside the validated domain but the
        // formula itself is plain algebra.
        p.g_qd = 1.0;
        p.n_inversion = 1.0;
        p.kappa_b = 0.0;
        p.kappa_d = 0.0;
        p.delta_b = 1.0;
        p.delta_d = 1.0;
        assert_eq!(helper_constants(&p), (-2.0, 0.0));
    }

    #[test]
    fn drive_value_examples() {
        let d = DriveConfig {
            eta0: 0.3,
            p_amp: 0.2,
            omega_mod: 2.0,
        };
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(drive_value(0.0, &d), 0.5);
        assert_abs_diff_eq!(drive_value(pi / 4.0, &d), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(drive_value(pi / 2.0, &d), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn validation_names_the_field() {
        let mut p = SystemParams::bistable_reference();
        p.n_inversion = 2.0;
        match p.validate() {
            Err(Error::InvalidParams { field, .. }) => assert_eq!(field, "n_inversion"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = SystemParams::bistable_reference();
        p.kappa_a = 0.0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::bistable_reference();
        p.chi = -0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn get_set_cover_every_name() {
        let mut p = SystemParams::bistable_reference();
        for (i, name) in PARAM_NAMES.iter().enumerate() {
            assert!(p.set(name, i as f64 + 0.5));
            assert_eq!(p.get(name), Some(i as f64 + 0.5));
        }
        assert!(!p.set("nope", 1.0));
        assert_eq!(p.get("nope"), None);
    }
}
