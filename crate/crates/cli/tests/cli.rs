use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn horoflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horoflow"))
        .current_dir(dir)
        .env_remove("HOROFLOW_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

#[test]
fn check_algebra_writes_residuals_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let o = horoflow(d.path(), &["check-algebra", "-o", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("out/residuals.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,s,residual"));
    assert_eq!(lines.next().unwrap(), "-1.0000000000000000e+1,-1.0000000000000000e+1,0.0000000000000000e+0");
    assert_eq!(csv.lines().count(), 1 + 41 * 41);
    assert!(!csv.contains('\r'));
    let m = json(d.path().join("out/manifest.json"));
    assert_eq!(m["scenario"], "check-algebra");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["versions"]["horoflow-core"].is_string());
    let a = json(d.path().join("out/algebra.json"));
    assert!(a["max_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn invariants_exit_code_encodes_verdict() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "g2.toml",
        "scenario = \"invariants\"\nseed = 5\n[model]\npreset = \"genus2-octagon\"\n[field]\nlambda = 1.0\n\
         [numerics]\nsamples = 16\nhorizon = 10.0\naction_samples = 64\n",
    );
    let o = horoflow(d.path(), &["invariants", "g2.toml", "-o", "h"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(d.path().join("h/report.json"));
    assert_eq!(r["verdict"], "horocyclic");
    assert_eq!(r["action_formula"].as_f64(), Some(0.0));
    let contributions = fs::read_to_string(d.path().join("h/contributions.csv")).unwrap();
    assert_eq!(contributions.lines().count(), 1 + 64 + 16);

    let o = horoflow(d.path(), &["invariants", "g2.toml", "--lambda", "0.5", "-o", "n"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(d.path().join("n/report.json"))["verdict"], "not-horocyclic");
}

#[test]
fn config_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let o = horoflow(d.path(), &["invariants"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`seed`"));

    write(d.path(), "typo.toml", "seed = 1\n[numerics]\nhorizn = 3.0\n");
    let o = horoflow(d.path(), &["simulate", "typo.toml"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizn"));

    write(d.path(), "other.toml", "scenario = \"simulate\"\nseed = 1\n");
    assert_eq!(code(&horoflow(d.path(), &["variation", "other.toml"])), 2);
    assert_eq!(code(&horoflow(d.path(), &["no-such-scenario"])), 2);
    assert_eq!(code(&horoflow(d.path(), &["simulate", "missing.toml"])), 2);
}

#[test]
fn runtime_errors_print_a_json_record() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "torus.toml", "seed = 3\n[model]\npreset = \"flat-torus\"\n");
    let o = horoflow(d.path(), &["invariants", "torus.toml", "-o", "e"]);
    assert_eq!(code(&o), 1);
    let rec: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rec["scenario"], "invariants");
    assert_eq!(rec["error"], "numeric");
    assert_eq!(json(d.path().join("e/error.json")), rec);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "sim.toml",
        "seed = 11\n[field]\nlambda = 0.7\n[numerics]\nsamples = 4\nhorizon = 3.0\ndt = 0.01\n",
    );
    for (dir, workers) in [("r1", "1"), ("r2", "1"), ("r3", "3")] {
        let o = horoflow(d.path(), &["simulate", "sim.toml", "-o", dir, "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    for f in ["orbit.csv", "diagnostics.json"] {
        let a = fs::read(d.path().join("r1").join(f)).unwrap();
        assert_eq!(a, fs::read(d.path().join("r2").join(f)).unwrap(), "{f}");
        assert_eq!(a, fs::read(d.path().join("r3").join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(d.path().join("r1/orbit.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("orbit,t,x,y,phi,word_length"));
    assert_eq!(csv.lines().count(), 1 + 4 * 301);
    let m1 = json(d.path().join("r1/manifest.json"));
    let m3 = json(d.path().join("r3/manifest.json"));
    assert_eq!(m3["workers"], 3);
    assert_ne!(m1["config_sha256"], m3["config_sha256"], "worker count is part of the config");
}

#[test]
fn variation_reports_conjugate_points() {
    let d = tempfile::tempdir().unwrap();
    let o = horoflow(d.path(), &["variation", "--lambda", "2", "--horizon", "4", "-o", "v"]);
    assert_eq!(code(&o), 0);
    let c = json(d.path().join("v/conjugate_points.json"));
    let times: Vec<f64> = c["conjugate_points"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let w = 3f64.sqrt();
    assert_eq!(times.len(), 2);
    for (k, t) in times.iter().enumerate() {
        assert!((t - (k + 1) as f64 * std::f64::consts::PI / w).abs() < 1e-8);
    }
    let traces = fs::read_to_string(d.path().join("v/traces.csv")).unwrap();
    assert_eq!(traces.lines().next(), Some("t,y,ydot,u"));
}

#[test]
fn closed_orbit_and_critical_value_on_the_torus() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "torus.toml",
        "[model]\npreset = \"flat-torus\"\n[closed_orbit]\nword = \"T1 T2\"\nenergy = 0.5\n[numerics]\nresolution = 8\n",
    );
    let o = horoflow(d.path(), &["closed-orbit", "torus.toml", "-o", "co"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(d.path().join("co/closed_orbit.json"));
    assert_eq!(r["word"], "T1^1 T2^1");
    assert!((r["length"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);
    assert!(r["closing_defect"].as_f64().unwrap() < 1e-3);

    let o = horoflow(d.path(), &["critical-value", "torus.toml", "-o", "cv"]);
    assert_eq!(code(&o), 0);
    let c = json(d.path().join("cv/certificate.json"));
    assert_eq!(c["c_upper"].as_f64(), Some(0.0));
    let pot = fs::read_to_string(d.path().join("cv/potential.csv")).unwrap();
    assert_eq!(pot.lines().count(), 1 + 64);

    write(d.path(), "bad_word.toml", "[model]\npreset = \"flat-torus\"\n[closed_orbit]\nword = \"a\"\n");
    assert_eq!(code(&horoflow(d.path(), &["closed-orbit", "bad_word.toml", "-o", "bw"])), 2);
}

#[test]
fn acceptance_subset_runs_from_the_cli() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "acc.toml", "seed = 1\n[acceptance]\ncriteria = [1, 8]\n");
    let o = horoflow(d.path(), &["acceptance", "acc.toml", "-o", "acc"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("AC1 PASS") && stdout.contains("AC8 PASS"));
    let a = json(d.path().join("acc/acceptance.json"));
    assert_eq!(a["criteria"].as_array().unwrap().len(), 2);
    assert!(json(d.path().join("acc/manifest.json"))["timing"].is_array());
    write(d.path(), "bad.toml", "seed = 1\n[acceptance]\ncriteria = [9]\n");
    assert_eq!(code(&horoflow(d.path(), &["acceptance", "bad.toml"])), 2);
}
