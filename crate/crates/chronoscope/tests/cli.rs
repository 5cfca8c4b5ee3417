//! End-to-end tests of the `chronoscope` binary: exit codes, artifact
//! layout, and byte-level determinism across runs.

use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_chronoscope");

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

const WIGNER_CFG: &str = r#"{
    "scenario": "wigner",
    "grid": {"count": 64, "center": 0.0, "span": 16.0},
    "state": {"family": "chirped_gaussian", "center": 0.0, "width": 1.0, "chirp": 0.3}
}"#;

#[test]
fn wigner_run_emits_manifest_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.json", WIGNER_CFG);
    let out = tmp.path().join("out");
    let r = run(&["wigner", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    for name in ["manifest.json", "wigner.csv", "wigner.pgm", "wigner.pgm.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "wigner");
    assert!(manifest["files"].as_array().unwrap().len() >= 3);
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "r.json",
        r#"{
            "scenario": "retrieve",
            "grid": {"count": 64, "center": 0.0, "span": 16.0},
            "state": {"family": "chirped_gaussian", "center": 0.0, "width": 1.0, "chirp": 0.2},
            "window": {"family": "hamming", "span": 6.0}
        }"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let r = run(&[
            "retrieve",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "7",
        ]);
        assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.len() >= 4);
    for name in names {
        let bytes_a = fs::read(a.join(&name)).unwrap();
        let bytes_b = fs::read(b.join(&name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
    }
}

#[test]
fn scenario_mismatch_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.json", WIGNER_CFG);
    let r = run(&["spectrogram", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn malformed_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{ not json");
    let r = run(&["wigner", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn nyquist_violation_is_a_numerical_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "n.json",
        r#"{
            "scenario": "wigner",
            "grid": {"count": 64, "center": 0.0, "span": 16.0},
            "state": {"family": "gaussian", "center": 0.0, "width": 1.0},
            "axes": {
                "tau": {"start": -40.0, "step": 5.0, "count": 17},
                "mu": {"start": -2.0, "step": 0.5, "count": 9}
            }
        }"#,
    );
    let out = tmp.path().join("out");
    let r = run(&["wigner", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn failed_check_sets_exit_code_four() {
    // axes covering only a sliver of phase space break the normalization
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{
            "scenario": "wigner",
            "grid": {"count": 64, "center": 0.0, "span": 16.0},
            "state": {"family": "gaussian", "center": 0.0, "width": 1.0},
            "axes": {
                "tau": {"start": -1.0, "step": 0.25, "count": 9},
                "mu": {"start": -1.0, "step": 0.25, "count": 9}
            }
        }"#,
    );
    let out = tmp.path().join("out");
    let r = run(&[
        "wigner",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(r.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&r.stderr));
}
