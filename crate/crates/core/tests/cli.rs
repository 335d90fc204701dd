//! The `maglev` binary: exit codes, diagnostics and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn maglev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maglev")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A short thermal run.
const THERMAL: &str = r#"
scenario = "thermalize"
seed = 17

[particle]
mass_kg = 3.10e-15

[trap]
mode = "harmonic"
frequencies_hz = [59.6, 96.9, 7.01]

[environment]
temperature_k = 295.0
damping_override_hz = 1.0

[simulation]
duration_s = 20.0
dt_s = 1.0e-4
record_interval_s = 1.0e-3
members = 2
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn run_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "thermal.toml", THERMAL);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for dir in [&a, &b] {
        let o = maglev(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let fa = files(&a);
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    for expected in ["meta.json", "psd_x.csv", "psd_y.csv", "psd_z.csv", "report.json", "trajectory.csv"] {
        assert!(names.contains(&expected), "{expected} missing from {names:?}");
    }
    assert_eq!(fa, files(&b));

    let o = maglev(&["run", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap(), "--seed", "18"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_ne!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(c.join("trajectory.csv")).unwrap());
}

#[test]
fn outputs_carry_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "thermal.toml", THERMAL);
    let out = tmp.path().join("run");
    let o = maglev(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 17);
    let hash = meta["config_hash"].as_str().unwrap();
    let psd = fs::read_to_string(out.join("psd_y.csv")).unwrap();
    assert!(psd.starts_with('#') && psd.lines().next().unwrap().contains(hash), "{}", psd.lines().next().unwrap());
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains(hash));
}

#[test]
fn invalid_config_exits_4_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cold.toml", &THERMAL.replace("temperature_k = 295.0", "temperature_k = -1.0"));
    let out = tmp.path().join("never");
    let o = maglev(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("environment.temperature_k"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn validate_lists_every_problem_by_key_path() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[detector]\nsample_rate_hz = 1000.0\n\n[controller]\ndirection = [0.0, 1.0, 0.0]\noffset_n = 1.0e-15\nbounds_n = [0.0, 2.0e-15]\n\n[controller.y]\ncenter_hz = 700.0\nbandwidth_hz = 20.0\ntarget_damping_hz = 1.0\n",
        THERMAL.replace("\"thermalize\"", "\"cool\"").replace("members = 2", "members = 0")
    );
    let cfg = write(tmp.path(), "bad.toml", &text);
    let o = maglev(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    let err = stderr(&o);
    assert!(err.contains("simulation.members"), "{err}");
    assert!(err.contains("controller.y.center_hz"), "{err}");
}

#[test]
fn missing_and_unknown_keys_are_named() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = write(tmp.path(), "missing.toml", &THERMAL.replace("dt_s = 1.0e-4\n", ""));
    let o = maglev(&["validate", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("dt_s"), "{}", stderr(&o));

    let unknown = write(tmp.path(), "unknown.toml", &THERMAL.replace("members = 2", "members = 2\nmembrs = 3"));
    let o = maglev(&["validate", "--config", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("membrs"), "{}", stderr(&o));
}

#[test]
fn unreadable_config_exits_3() {
    let o = maglev(&["validate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&maglev(&["run"])), 2);
    assert_eq!(code(&maglev(&["frobnicate"])), 2);
}

#[test]
fn report_rejects_other_schema_versions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "thermal.toml", THERMAL);
    let out = tmp.path().join("run");
    assert_eq!(code(&maglev(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);

    let o = maglev(&["report", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("scenario thermalize"));
    // a thermal run has no charge readout
    assert!(stdout(&o).contains("charge steps = not measured"), "{}", stdout(&o));

    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let bumped = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert_ne!(text, bumped);
    let p = write(tmp.path(), "future.json", &bumped);
    let o = maglev(&["report", p.to_str().unwrap()]);
    assert_eq!(code(&o), 8);
    assert!(stderr(&o).contains("99"), "{}", stderr(&o));
}

#[test]
fn sweep_runs_each_config_into_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "first.toml", THERMAL);
    let b = write(tmp.path(), "second.toml", &THERMAL.replace("seed = 17", "seed = 3"));
    let out = tmp.path().join("sweep");
    let o = maglev(&["sweep", "--config", a.to_str().unwrap(), b.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("first/report.json").exists());
    assert!(out.join("second/report.json").exists());
}
