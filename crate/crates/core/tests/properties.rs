use optomech_core::dynamics::integrate_meanfield;
use optomech_core::linear::{drift_matrix, stability};
use optomech_core::meanfield::MeanFieldState;
use optomech_core::spectrum::linspace;
use optomech_core::steady::{fixed_point_residual, solve_transmitted_power, steady_states};
use optomech_core::switching::{hysteresis_sweep, Ramp};
use optomech_core::{bistability_curve, DriveConfig, SystemParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SystemParams> {
    (
        proptest::array::uniform4(0.05f64..2.0),
        proptest::array::uniform3(-1.5f64..1.5),
        proptest::array::uniform4(0.0f64..1.5),
        0.0f64..std::f64::consts::TAU,
        -1.0f64..1.0,
    )
        .prop_map(|(rates, det, coup, theta, n)| SystemParams {
            omega_m: 1.0,
            kappa_a: rates[0],
            kappa_b: rates[1],
            kappa_d: rates[2],
            gamma_m: rates[3],
            delta_a: det[0],
            delta_b: det[1],
            delta_d: det[2],
            j_coupling: coup[0],
            g_qd: coup[1],
            chi: coup[2],
            lambda_pump: coup[3],
            theta,
            n_inversion: n,
            thermal_ratio: 1e-6,
        })
}

/// Every frequency-like quantity multiplied by `s`.
fn rescaled(p: &SystemParams, s: f64) -> SystemParams {
    SystemParams {
        omega_m: p.omega_m * s,
        kappa_a: p.kappa_a * s,
        kappa_b: p.kappa_b * s,
        kappa_d: p.kappa_d * s,
        gamma_m: p.gamma_m * s,
        delta_a: p.delta_a * s,
        delta_b: p.delta_b * s,
        delta_d: p.delta_d * s,
        j_coupling: p.j_coupling * s,
        g_qd: p.g_qd * s,
        lambda_pump: p.lambda_pump * s,
        ..*p
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn steady_states_do_not_depend_on_the_frequency_unit(
        p in params(), eta0 in 0.0f64..1.0, c in 0.0f64..0.5, s in 0.2f64..5.0,
    ) {
        let base = solve_transmitted_power(&p, eta0, c).unwrap();
        let scaled = solve_transmitted_power(&rescaled(&p, s), eta0 * s, c).unwrap();
        prop_assume!(base.iter().all(|r| r.multiplicity == 1));
        prop_assert_eq!(base.len(), scaled.len());
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((a.value - b.value).abs() <= 1e-8 * a.value.max(1e-12), "{} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn every_root_is_a_fixed_point(p in params(), eta0 in 0.0f64..1.0, c in 0.0f64..0.5) {
        for s in steady_states(&p, eta0, c).unwrap() {
            let scale = eta0.max(s.a_s.norm() * p.kappa_a).max(1e-3);
            prop_assert!(fixed_point_residual(&p, eta0, c, &s.as_meanfield()) <= 1e-9 * scale);
        }
    }

    #[test]
    fn drift_trace_is_the_total_loss(p in params(), eta0 in 0.0f64..1.0) {
        let total = -(p.gamma_m + 2.0 * p.kappa_a + 2.0 * p.kappa_b);
        for s in steady_states(&p, eta0, 0.0).unwrap() {
            let m = drift_matrix(&p, &s);
            prop_assert!((m.trace() - total).abs() <= 1e-12 * total.abs());
            let eig_sum: f64 = stability(&m).eigenvalues.iter().map(|z| z.re).sum();
            prop_assert!((eig_sum - total).abs() <= 1e-8 * total.abs().max(1.0));
        }
    }

    #[test]
    fn linear_response_scales_with_input_power(p in params(), eta0 in 0.01f64..1.0, s in 0.1f64..3.0) {
        let linear = SystemParams { chi: 0.0, n_inversion: 0.0, ..p };
        let a = solve_transmitted_power(&linear, eta0, 0.0).unwrap();
        let b = solve_transmitted_power(&linear, s * eta0, 0.0).unwrap();
        prop_assert_eq!(a.len(), 1);
        prop_assert!((b[0].value - s * s * a[0].value).abs() <= 1e-10 * b[0].value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn slow_ramps_trace_the_monostable_curve(chi in 0.02f64..0.1, c in 0.0f64..0.3) {
        let p = SystemParams { chi, gamma_m: 1.0, ..SystemParams::bistable_reference() };
        let ramp = Ramp { input_min: 0.01, input_max: 1.0, rate: 2.5e-5, points: 50 };
        let curve = bistability_curve(&p, &linspace(0.01, 1.0, 50), c).unwrap();
        prop_assume!(!curve.is_bistable());
        let lp = hysteresis_sweep(&p, &ramp, c, 1e-9).unwrap();
        prop_assert!(lp.jump_up.is_none() && lp.jump_down.is_none());
        for (k, pt) in curve.points.iter().enumerate() {
            let target = pt.roots[0].p_trans;
            prop_assert!((lp.input_power[k] - pt.input_power).abs() < 1e-12);
            prop_assert!((lp.up[k] - target).abs() <= 2e-3 * target.max(1e-3), "up {} vs {}", lp.up[k], target);
            prop_assert!((lp.down[k] - target).abs() <= 2e-3 * target.max(1e-3), "down {} vs {}", lp.down[k], target);
        }
    }

    #[test]
    fn integration_is_deterministic(eta0 in 0.0f64..0.5, p_amp in 0.0f64..0.5, w in 0.3f64..2.0) {
        let p = SystemParams::switching_strong_hopping();
        let drive = DriveConfig { eta0, p_amp, omega_mod: w };
        let run = || integrate_meanfield(&p, &drive, (0.0, 40.0), &MeanFieldState::zero(), 1e-8, 201).unwrap();
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn upper_knee_is_where_two_roots_merge() {
    let p = SystemParams::bistable_reference();
    let curve = bistability_curve(&p, &linspace(0.01, 1.5, 300), 0.1).unwrap();
    let (open, close) = curve.window().unwrap();
    let count = |i: f64| solve_transmitted_power(&p, i.sqrt(), 0.1).unwrap().len();
    assert_eq!(count(open * (1.0 - 1e-6)), 1);
    assert_eq!(count(open * (1.0 + 1e-6)), 3);
    assert_eq!(count(close * (1.0 - 1e-6)), 3);
    assert_eq!(count(close * (1.0 + 1e-6)), 1);
}
