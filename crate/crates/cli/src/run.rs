//! Task execution: turns a validated scenario into in-memory result files.

use optomech_core::bistability::bistability_curve;
use optomech_core::closed_form::audit_closed_form;
use optomech_core::linear::{drift_matrix, stability};
use optomech_core::noise::NoiseModel;
use optomech_core::params::rocking_parameter;
use optomech_core::spectrum::spectrum_matrix;
use optomech_core::steady::steady_states;
use optomech_core::switching::{adiabatic_jumps, bandwidth, hysteresis_sweep, switch_metrics, Ramp};
use optomech_core::{DriveConfig, Error, Peak, SystemParams, ThermalFactor};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Branch, ScanParam, ScenarioConfig, SweepSpec, TaskSpec};
use crate::output::{num, Table};

/// Everything a task produces before it touches the disk.
#[derive(Debug, Clone, Default)]
pub struct TaskOutput {
    /// `(file name, table)` in write order.
    pub tables: Vec<(String, Table)>,
    /// Body of `results.json`.
    pub results: Value,
    /// Body of `peaks.json`, for spectrum tasks.
    pub peaks: Option<Value>,
}

fn error_record(e: &Error) -> Value {
    json!({ "kind": error_kind(e), "message": e.to_string() })
}

/// Stable snake_case name of a core error.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParams { .. } => "invalid_params",
        Error::InvalidDrive(_) => "invalid_drive",
        Error::DegenerateModel(_) => "degenerate_model",
        Error::SingularResponse(_) => "singular_response",
        Error::NoConvergence { .. } => "no_convergence",
        Error::IntegrationFailure { .. } => "integration_failure",
        Error::UnstableSteadyState { .. } => "unstable_steady_state",
        Error::UndefinedRatio { .. } => "undefined_ratio",
        Error::UndefinedGain => "undefined_gain",
        Error::DegenerateGrid(_) => "degenerate_grid",
        Error::NonPhysicalSpectrum(_) => "non_physical_spectrum",
        Error::SingularDenominator { .. } => "singular_denominator",
    }
}

fn resolve_rocking(explicit: Option<f64>, drive: &DriveConfig) -> Result<f64, Error> {
    match explicit {
        Some(c) => Ok(c),
        None => rocking_parameter(drive),
    }
}

fn stability_label(s: optomech_core::Stability) -> &'static str {
    match s {
        optomech_core::Stability::Stable => "stable",
        optomech_core::Stability::Unstable => "unstable",
    }
}

fn peaks_json(peaks: &[Peak]) -> Value {
    json!({
        "count": peaks.len(),
        "peaks": peaks.iter().map(|p| json!({
            "omega": p.position,
            "height": p.height,
            "prominence": p.prominence,
            "width": p.width,
        })).collect::<Vec<_>>(),
    })
}

fn run_bistability(
    params: &SystemParams,
    drive: &DriveConfig,
    t: &crate::config::BistabilityTask,
) -> Result<TaskOutput, Error> {
    let rocking = resolve_rocking(t.rocking, drive)?;
    let curve = bistability_curve(params, &t.input_grid.values(), rocking)?;
    let mut table = Table::new(&[
        "input_power[omega_m^2]",
        "branch_index",
        "p_trans[photons]",
        "stability",
        "max_real_part[omega_m]",
    ]);
    for (i, pt) in curve.points.iter().enumerate() {
        for (root, branch) in pt.roots.iter().zip(curve.branch_indices(i)) {
            table.push(vec![
                num(pt.input_power),
                branch.to_string(),
                num(root.p_trans),
                stability_label(root.stability).to_string(),
                num(root.max_real_part),
            ]);
        }
    }
    let window = curve.window();
    Ok(TaskOutput {
        tables: vec![("bistability.csv".into(), table)],
        results: json!({
            "rocking": rocking,
            "bistable": curve.is_bistable(),
            "knees": curve.knees,
            "window": window.map(|(open, close)| json!({ "open": open, "close": close })),
        }),
        peaks: None,
    })
}

fn run_spectrum(
    params: &SystemParams,
    drive: &DriveConfig,
    t: &crate::config::SpectrumTask,
) -> Result<TaskOutput, Error> {
    let rocking = resolve_rocking(t.rocking, drive)?;
    let stable: Vec<_> = steady_states(params, drive.eta0, rocking)?
        .into_iter()
        .map(|s| (stability(&drift_matrix(params, &s)), s))
        .collect();
    let max_real = stable.iter().map(|(r, _)| r.max_real_part).fold(f64::INFINITY, f64::min);
    let mut candidates = stable.iter().filter(|(r, _)| r.is_stable());
    let chosen = match t.branch {
        Branch::Lower => candidates.next(),
        Branch::Upper => candidates.next_back(),
    };
    let (report, steady) = chosen.ok_or(Error::UnstableSteadyState { max_real_part: max_real })?;
    let grid = t.omega_grid.values();
    let noise = NoiseModel::from_params(params);
    let series = spectrum_matrix(params, steady, &noise, &grid)?;

    let mut table = Table::new(&["omega[omega_m]", "S_q[dimensionless]"]);
    for (w, s) in series.omega.iter().zip(&series.s_q) {
        table.push(vec![num(*w), num(*s)]);
    }
    let mut tables = vec![("spectrum.csv".to_string(), table)];
    let mut results = json!({
        "rocking": rocking,
        "steady_state": steady,
        "max_real_part": report.max_real_part,
        "imag_residue": series.imag_residue,
        "peak_count": series.peaks.len(),
    });
    if let Some(thermal) = t.closed_form {
        // The printed thermal factor diverges at zero frequency.
        let audit_grid: Vec<f64> = match thermal {
            ThermalFactor::Printed => grid.iter().copied().filter(|w| *w > 0.0).collect(),
            ThermalFactor::SymmetrizedBrownian => grid.clone(),
        };
        let audit = audit_closed_form(params, steady, &noise, &audit_grid, thermal)?;
        let mut ct = Table::new(&[
            "omega[omega_m]",
            "S_q_matrix[dimensionless]",
            "S_q_closed_form[dimensionless]",
            "rel_deviation[dimensionless]",
        ]);
        for s in &audit.samples {
            ct.push(vec![num(s.omega), num(s.matrix), num(s.closed_form), num(s.rel_deviation)]);
        }
        tables.push(("closed_form.csv".into(), ct));
        results["closed_form_audit"] = json!({
            "thermal_factor": audit.thermal,
            "samples": audit.samples.len(),
            "max_rel_deviation": audit.max_rel_deviation,
            "flagged": audit.flagged,
            "matrix_peaks": audit.matrix_peaks,
            "closed_form_peaks": audit.closed_form_peaks,
        });
    }
    Ok(TaskOutput {
        tables,
        results,
        peaks: Some(peaks_json(&series.peaks)),
    })
}

#[derive(Debug, Clone, Serialize)]
struct SwitchRow {
    p_amp: f64,
    omega_mod: f64,
    switch_ratio: Option<f64>,
    gain: Option<f64>,
    bandwidth: Option<f64>,
    periodicity: Option<optomech_core::Periodicity>,
    status: &'static str,
    error: Option<Value>,
}

fn periodicity_label(p: optomech_core::Periodicity) -> String {
    match p {
        optomech_core::Periodicity::Periodic => "periodic".into(),
        optomech_core::Periodicity::Subharmonic(n) => format!("subharmonic_{n}"),
        optomech_core::Periodicity::Aperiodic => "aperiodic".into(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn run_switch(
    params: &SystemParams,
    drive: &DriveConfig,
    t: &crate::config::SwitchTask,
) -> Result<TaskOutput, Error> {
    let drives: Vec<DriveConfig> = match &t.scan {
        None => vec![*drive],
        Some((param, grid)) => grid
            .values()
            .into_iter()
            .map(|v| match param {
                ScanParam::PAmp => DriveConfig { p_amp: v, ..*drive },
                ScanParam::OmegaMod => DriveConfig { omega_mod: v, ..*drive },
            })
            .collect(),
    };
    let metrics: Vec<_> = drives
        .par_iter()
        .map(|d| switch_metrics(params, d, &t.policy))
        .collect();

    // One bandwidth curve per distinct modulation depth.
    let mut amps: Vec<f64> = drives.iter().map(|d| d.p_amp).collect();
    amps.dedup();
    let curves: Vec<(f64, Result<_, Error>)> = match &t.bandwidth_grid {
        None => Vec::new(),
        Some(g) => {
            let g = g.values();
            amps.par_iter()
                .map(|&a| (a, bandwidth(params, drive.eta0, a, &g, &t.policy)))
                .collect()
        }
    };

    let mut table = Table::new(&[
        "p_amp[omega_m]",
        "omega_mod[omega_m]",
        "switch_ratio[dimensionless]",
        "gain[dimensionless]",
        "bandwidth[omega_m]",
        "periodicity",
        "status",
    ]);
    let mut rows = Vec::new();
    for (d, m) in drives.iter().zip(&metrics) {
        let bw = curves.iter().find(|(a, _)| *a == d.p_amp).map(|(_, c)| c);
        let bw_value = bw.and_then(|c| c.as_ref().ok()).map(|c| c.bandwidth);
        let (status, error) = match (m, bw) {
            (Err(e), _) | (Ok(_), Some(Err(e))) => (error_kind(e), Some(error_record(e))),
            _ => ("ok", None),
        };
        let row = SwitchRow {
            p_amp: d.p_amp,
            omega_mod: d.omega_mod,
            switch_ratio: m.as_ref().ok().map(|m| m.switch_ratio),
            gain: m.as_ref().ok().map(|m| m.gain),
            bandwidth: bw_value,
            periodicity: m.as_ref().ok().map(|m| m.periodicity),
            status,
            error,
        };
        table.push(vec![
            num(row.p_amp),
            num(row.omega_mod),
            opt(row.switch_ratio),
            opt(row.gain),
            opt(row.bandwidth),
            row.periodicity.map(periodicity_label).unwrap_or_default(),
            row.status.to_string(),
        ]);
        rows.push(row);
    }
    if rows.iter().all(|r| r.status != "ok") {
        if let Some(Err(e)) = metrics.iter().find(|m| m.is_err()) {
            return Err(e.clone());
        }
        if let Some((_, Err(e))) = curves.iter().find(|(_, c)| c.is_err()) {
            return Err(e.clone());
        }
    }
    let mut tables = vec![("switch_metrics.csv".to_string(), table)];
    let mut bw_json = Vec::new();
    if !curves.is_empty() {
        let mut bt = Table::new(&["p_amp[omega_m]", "omega_mod[omega_m]", "gain[dimensionless]"]);
        for (a, c) in &curves {
            if let Ok(c) = c {
                for (w, g) in c.omega.iter().zip(&c.gain) {
                    bt.push(vec![num(*a), num(*w), num(*g)]);
                }
                bw_json.push(json!({ "p_amp": a, "max_gain": c.max_gain, "bandwidth": c.bandwidth }));
            }
        }
        tables.push(("bandwidth.csv".into(), bt));
    }
    Ok(TaskOutput {
        tables,
        results: json!({
            "eta0": drive.eta0,
            "policy": t.policy,
            "points": rows,
            "bandwidth": bw_json,
        }),
        peaks: None,
    })
}

fn run_hysteresis(
    params: &SystemParams,
    drive: &DriveConfig,
    t: &crate::config::HysteresisTask,
) -> Result<TaskOutput, Error> {
    let rocking = resolve_rocking(t.rocking, drive)?;
    let ramp = Ramp {
        input_min: t.input_min,
        input_max: t.input_max,
        rate: t.rate,
        points: t.points,
    };
    let lp = hysteresis_sweep(params, &ramp, rocking, t.tol)?;
    let mut table = Table::new(&["input_power[omega_m^2]", "up[photons]", "down[photons]"]);
    for k in 0..lp.input_power.len() {
        table.push(vec![num(lp.input_power[k]), num(lp.up[k]), num(lp.down[k])]);
    }
    let knee_grid = optomech_core::spectrum::linspace(t.input_min, t.input_max, 400);
    let window = bistability_curve(params, &knee_grid, rocking)?.window();
    let mut results = json!({
        "rocking": rocking,
        "rate": t.rate,
        "area": lp.area,
        "jump_up": lp.jump_up,
        "jump_down": lp.jump_down,
        "knees": window.map(|(open, close)| json!({ "open": open, "close": close })),
    });
    if t.richardson {
        let adiabatic = adiabatic_jumps(params, &ramp, rocking, t.tol)?;
        let rel = |x: Option<f64>, knee: Option<f64>| match (x, knee) {
            (Some(x), Some(k)) => Some(x / k - 1.0),
            _ => None,
        };
        results["adiabatic"] = json!({
            "rates": adiabatic.rates,
            "jump_up": adiabatic.jump_up,
            "jump_down": adiabatic.jump_down,
            "extrapolated_up": adiabatic.extrapolated_up,
            "extrapolated_down": adiabatic.extrapolated_down,
            "rel_deviation_up": rel(adiabatic.extrapolated_up, window.map(|w| w.1)),
            "rel_deviation_down": rel(adiabatic.extrapolated_down, window.map(|w| w.0)),
        });
    }
    Ok(TaskOutput {
        tables: vec![("hysteresis.csv".into(), table)],
        results,
        peaks: None,
    })
}

/// Runs one non-sweep task.
pub fn run_task(params: &SystemParams, drive: &DriveConfig, task: &TaskSpec) -> Result<TaskOutput, Error> {
    match task {
        TaskSpec::Bistability(t) => run_bistability(params, drive, t),
        TaskSpec::Spectrum(t) => run_spectrum(params, drive, t),
        TaskSpec::SwitchMetrics(t) => run_switch(params, drive, t),
        TaskSpec::Hysteresis(t) => run_hysteresis(params, drive, t),
    }
}

/// Applies one sweep value to copies of the inputs.
fn apply(
    cfg: &ScenarioConfig,
    param: &str,
    value: f64,
) -> Result<(SystemParams, DriveConfig, TaskSpec), Error> {
    let mut params = cfg.params;
    let mut drive = cfg.drive;
    let mut task = cfg.task.clone();
    match param {
        "eta0" => drive.eta0 = value,
        "p_amp" => drive.p_amp = value,
        "omega_mod" => drive.omega_mod = value,
        "rocking" => match &mut task {
            TaskSpec::Bistability(t) => t.rocking = Some(value),
            TaskSpec::Spectrum(t) => t.rocking = Some(value),
            TaskSpec::Hysteresis(t) => t.rocking = Some(value),
            TaskSpec::SwitchMetrics(_) => unreachable!("rejected at parse time"),
        },
        name => {
            params.set(name, value);
        }
    }
    params.validate()?;
    drive.validate()?;
    Ok((params, drive, task))
}

fn run_sweep(cfg: &ScenarioConfig, sweep: &SweepSpec) -> Result<TaskOutput, Error> {
    let values = sweep.values.values();
    let outcomes: Vec<Result<TaskOutput, Error>> = values
        .par_iter()
        .map(|&v| {
            let (p, d, t) = apply(cfg, &sweep.param, v)?;
            run_task(&p, &d, &t)
        })
        .collect();
    if let Some(Err(e)) = outcomes.iter().find(|_| outcomes.iter().all(|o| o.is_err())) {
        return Err(e.clone());
    }

    let column = format!("{}[{}]", sweep.param, unit_of(&sweep.param));
    let mut tables: Vec<(String, Table)> = Vec::new();
    let mut status = Table::new(&["point", &column, "status", "error"]);
    let mut points = Vec::new();
    let mut peaks = Vec::new();
    for (i, (v, o)) in values.iter().zip(&outcomes).enumerate() {
        match o {
            Ok(out) => {
                for (name, t) in &out.tables {
                    let slot = match tables.iter_mut().find(|(n, _)| n == name) {
                        Some(slot) => slot,
                        None => {
                            let mut header = vec!["point".to_string(), column.clone()];
                            header.extend(t.header.iter().cloned());
                            tables.push((name.clone(), Table::from_header(header)));
                            tables.last_mut().unwrap()
                        }
                    };
                    for row in &t.rows {
                        let mut r = vec![i.to_string(), num(*v)];
                        r.extend(row.iter().cloned());
                        slot.1.push(r);
                    }
                }
                status.push(vec![i.to_string(), num(*v), "ok".into(), String::new()]);
                points.push(json!({ "point": i, "value": v, "status": "ok", "result": out.results }));
                if let Some(p) = &out.peaks {
                    peaks.push(json!({ "point": i, "value": v, "peaks": p }));
                }
            }
            Err(e) => {
                log::warn!("sweep point {i} ({} = {v}) failed: {e}", sweep.param);
                status.push(vec![i.to_string(), num(*v), "error".into(), error_kind(e).into()]);
                points.push(json!({ "point": i, "value": v, "status": "error", "error": error_record(e) }));
            }
        }
    }
    tables.push(("sweep.csv".into(), status));
    Ok(TaskOutput {
        tables,
        results: json!({
            "base": cfg.task.kind().as_str(),
            "sweep_param": sweep.param,
            "points": points,
        }),
        peaks: matches!(cfg.task, TaskSpec::Spectrum(_)).then(|| json!({ "series": peaks })),
    })
}

/// Unit label of a configurable quantity.
pub fn unit_of(name: &str) -> &'static str {
    match name {
        "theta" => "rad",
        "n_inversion" | "thermal_ratio" | "chi" | "rocking" => "dimensionless",
        _ => "omega_m",
    }
}

/// Runs the scenario; files are produced in memory only.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<TaskOutput, Error> {
    let mut out = match &cfg.sweep {
        Some(sw) => run_sweep(cfg, sw)?,
        None => run_task(&cfg.params, &cfg.drive, &cfg.task)?,
    };
    if let Value::Object(map) = &mut out.results {
        map.insert("task".into(), json!(cfg.kind().as_str()));
    }
    Ok(out)
}
