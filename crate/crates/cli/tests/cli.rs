use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_optomech-switch"))
        .args(&args[..1])
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(&args[1..])
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("case.cfg");
    fs::write(&p, text).unwrap();
    p
}

const BISTABILITY: &str = "\
[system]
preset = bistable_reference

[drive]
eta0 = 0.1

[task]
kind = bistability
input_grid = linspace(0.01, 1.5, 100)
rocking = 0.1
";

#[test]
fn invalid_parameter_is_a_config_error_with_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &BISTABILITY.replace("preset = bistable_reference", "preset = bistable_reference\nn_inversion = 2"));
    let out = tmp.path().join("out");
    assert_eq!(run(&["bistability"], &cfg, &out), 2);
    let err = json(&out.join("error.json"));
    assert_eq!(err["exit_code"], 2);
    assert_eq!(err["kind"], "config");
    assert_eq!(err["detail"]["line"], 3);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 1);
}

#[test]
fn empty_sweep_grid_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("fig2_bistability.cfg"))
        .unwrap()
        .replace("[0.1, 0.36, 0.49]", "[]");
    let cfg = write_config(tmp.path(), &text);
    assert_eq!(run(&["sweep"], &cfg, &tmp.path().join("out")), 2);
}

#[test]
fn task_mismatch_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BISTABILITY);
    assert_eq!(run(&["spectrum"], &cfg, &tmp.path().join("out")), 2);
}

#[test]
fn missing_config_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["bistability"], &tmp.path().join("absent.cfg"), &out), 4);
    assert_eq!(json(&out.join("error.json"))["kind"], "io");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BISTABILITY);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    assert_eq!(run(&["bistability"], &cfg, &blocker.join("out")), 4);
}

#[test]
fn no_stable_state_is_a_numerical_failure() {
    // Above the bistable window only the upper branch remains, and it is
    // unstable there.
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
[system]
preset = bistable_reference

[drive]
eta0 = 1.1

[task]
kind = spectrum
omega_grid = linspace(0.0, 2.5, 500)
rocking = 0.1
";
    let cfg = write_config(tmp.path(), text);
    let out = tmp.path().join("out");
    assert_eq!(run(&["spectrum"], &cfg, &out), 3);
    let err = json(&out.join("error.json"));
    assert_eq!(err["kind"], "numerical");
    assert_eq!(err["detail"]["error"], "unstable_steady_state");
}

#[test]
fn format_override_and_manifest_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BISTABILITY);
    let out = tmp.path().join("out");
    assert_eq!(run(&["bistability", "--format", "csv"], &cfg, &out), 0);
    assert!(out.join("bistability.csv").exists());
    assert!(!out.join("results.json").exists());
    let manifest = json(&out.join("manifest.json"));
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let bytes = fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"], bytes.len());
        assert_eq!(f["sha256"], optomech_switch::output::sha256_hex(&bytes));
    }
    let canonical = fs::read_to_string(out.join("scenario.cfg")).unwrap();
    assert_eq!(manifest["config_sha256"], optomech_switch::output::sha256_hex(canonical.as_bytes()));
    let header = fs::read_to_string(out.join("bistability.csv")).unwrap();
    assert!(header.starts_with("input_power[omega_m^2],branch_index,p_trans[photons],stability,max_real_part[omega_m]\n"));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario("fig3a_pamp_strong.cfg");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["switch-metrics", "--jobs", "1"], &cfg, &a), 0);
    assert_eq!(run(&["switch-metrics", "--jobs", "4"], &cfg, &b), 0);
    for name in ["switch_metrics.csv", "results.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn rocking_sweep_moves_knees_down() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["sweep"], &scenario("fig2_bistability.cfg"), &out), 0);
    let results = json(&out.join("results.json"));
    let closes: Vec<f64> = results["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["result"]["window"]["close"].as_f64().unwrap())
        .collect();
    assert_eq!(closes.len(), 3);
    assert!(closes.windows(2).all(|w| w[1] < w[0]), "{closes:?}");
    let csv = fs::read_to_string(out.join("bistability.csv")).unwrap();
    assert!(csv.starts_with("point,rocking[dimensionless],input_power[omega_m^2],"));
    let status = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(status.lines().count(), 4);
    assert!(status.lines().skip(1).all(|l| l.contains(",ok,")));
}

#[test]
fn hopping_sweep_writes_spectra_and_peaks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["sweep"], &scenario("fig6a_spectrum_hopping.cfg"), &out), 0);
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("point,j_coupling[omega_m],omega[omega_m],S_q[dimensionless]"));
    assert_eq!(lines.count(), 3 * 2000);
    let peaks = json(&out.join("peaks.json"));
    let series = peaks["series"].as_array().unwrap();
    let js: Vec<f64> = series.iter().map(|s| s["value"].as_f64().unwrap()).collect();
    assert_eq!(js, [0.0, 1.0, 1.5]);
    for s in series {
        let count = s["peaks"]["count"].as_u64().unwrap() as usize;
        assert_eq!(s["peaks"]["peaks"].as_array().unwrap().len(), count);
    }
}

#[test]
fn hysteresis_reports_jumps_near_the_knees() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("fig2_hysteresis.cfg"))
        .unwrap()
        .replace("points = 8000", "points = 2000")
        .replace("rocking = 0.1", "rocking = 0.1\nrichardson = false");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    assert_eq!(run(&["hysteresis"], &cfg, &out), 0);
    let r = json(&out.join("results.json"));
    let (up, close) = (r["jump_up"].as_f64().unwrap(), r["knees"]["close"].as_f64().unwrap());
    let (down, open) = (r["jump_down"].as_f64().unwrap(), r["knees"]["open"].as_f64().unwrap());
    // Finite ramp rates delay both jumps past their knees.
    assert!(up > close && up < 1.1 * close);
    assert!(down < open && down > 0.7 * open);
    assert!(r.get("adiabatic").is_none());
}
