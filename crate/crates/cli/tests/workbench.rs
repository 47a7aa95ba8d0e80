use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pencil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pencil"))
        .args(args)
        .env_remove("PENCIL_TOLERANCE_PROFILE")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_writes_two_six_dimensional_tensors() {
    let out = pencil(&["build", "--n", "2", "--m", "2", "--k", "1", "--tau", "0+1i", "--seed", "7"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["dim"], 6);
    assert_eq!(doc["exact"], false);
    let tensors = doc["tensors"].as_array().unwrap();
    assert_eq!(tensors.len(), 2);
    assert_eq!(tensors[0]["label"], "c1");
    for row in tensors[1]["entries"].as_array().unwrap() {
        let row = row.as_array().unwrap();
        assert_eq!(row.len(), 5);
        assert!(row[..3].iter().all(|i| i.as_u64().unwrap() < 6));
    }
    assert_eq!(doc["meta"]["tau"], serde_json::json!([0.0, 1.0]));
}

#[test]
fn build_is_deterministic() {
    let args = ["build", "--n", "3", "--m", "2", "--k", "2", "--tau", "0.1+0.9i", "--seed", "11"];
    let a = pencil(&args);
    let b = pencil(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let other = pencil(&["build", "--n", "3", "--m", "2", "--k", "2", "--tau", "0.1+0.9i", "--seed", "12"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn export_import_export_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let third = dir.path().join("third.json");
    assert!(pencil(&["export", "--m", "3", "--out", path_str(&first)]).status.success());
    assert!(pencil(&["import", path_str(&first), "--out", path_str(&second)]).status.success());
    assert!(pencil(&["import", path_str(&second), "--out", path_str(&third)]).status.success());
    let bytes = fs::read(&first).unwrap();
    assert_eq!(bytes, fs::read(&second).unwrap());
    assert_eq!(bytes, fs::read(&third).unwrap());
}

#[test]
fn exact_round_trip_keeps_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rational.json");
    let out = pencil(&["build", "--degenerate", "rational", "--n", "2", "--m", "3", "--out", path_str(&file)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&file).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["exact"], true);
    assert_eq!(doc["meta"]["field"], "rational");
    assert_eq!(doc["dim"], 9);
    let cells: Vec<String> = doc["tensors"][0]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row[3].as_str().unwrap().to_string())
        .collect();
    assert!(cells.iter().any(|c| c.contains('/')), "expected a proper fraction among {cells:?}");
    let back = pencil(&["import", path_str(&file)]);
    assert!(back.status.success(), "{}", stderr(&back));
    assert_eq!(stdout(&back), text);
}

#[test]
fn trigonometric_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("trig.json");
    assert!(pencil(&["build", "--degenerate", "trig", "--n", "3", "--m", "2", "--out", path_str(&file)]).status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(doc["meta"]["field"], "cyclotomic-3");
    let back = pencil(&["import", path_str(&file)]);
    assert_eq!(stdout(&back), fs::read_to_string(&file).unwrap());
    let report = pencil(&["verify", "--input", path_str(&file)]);
    assert!(report.status.success(), "{}", stdout(&report));
}

#[test]
fn legacy_schema_is_an_explicit_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("old.json");
    fs::write(&file, r#"{"schema": 0, "dim": 3, "tensors": []}"#).unwrap();
    let out = pencil(&["import", path_str(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("schema version 0"), "{}", stderr(&out));
}

#[test]
fn tampered_antisymmetry_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    let text = r#"{"schema": 1, "dim": 2, "exact": false, "tensors": [{"label": "c1", "entries": [[0, 1, 0, 1.0, 0.0]]}], "meta": {}}"#;
    fs::write(&file, text).unwrap();
    let out = pencil(&["import", path_str(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("antisymmetric"), "{}", stderr(&out));
}

#[test]
fn default_verify_passes() {
    let out = pencil(&["verify"]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("tolerances: jacobi 1e-8"));
    assert!(text.ends_with("27/27 checks passed\n"), "{text}");
}

#[test]
fn perturbation_makes_verify_fail() {
    let out = pencil(&["verify", "--perturb", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL jacobi c1"));
}

#[test]
fn perturbed_document_fails_jacobi() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("e.json");
    assert!(pencil(&["build", "--out", path_str(&file)]).status.success());
    assert!(pencil(&["verify", "--input", path_str(&file)]).status.success());
    let out = pencil(&["verify", "--input", path_str(&file), "--perturb", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL jacobi c1"));
}

#[test]
fn coprimality_is_checked_first() {
    for cmd in ["build", "verify"] {
        let out = pencil(&[cmd, "--n", "4", "--k", "2"]);
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains("gcd(4, 2) = 2"), "{}", stderr(&out));
    }
}

#[test]
fn lower_half_plane_is_rejected() {
    let out = pencil(&["build", "--tau", "0.2-1i"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("upper half plane"));
}

#[test]
fn explicit_sections_are_accepted() {
    let out = pencil(&["build", "--mu1", "1,0.5-0.2i", "--mu2", "-0.3+1i,2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let short = pencil(&["build", "--mu1", "1", "--mu2", "1,2"]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn shift_battery_reports_json() {
    let out = pencil(&["verify", "--shift", "q83", "--family", "b-", "--json"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 20);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn profile_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_pencil"))
        .args(["verify", "--degenerate", "rational"])
        .env("PENCIL_TOLERANCE_PROFILE", "nonsense")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let strict = Command::new(env!("CARGO_BIN_EXE_pencil"))
        .args(["verify", "--l", "2", "--m", "3"])
        .env("PENCIL_TOLERANCE_PROFILE", "strict")
        .output()
        .unwrap();
    assert!(strict.status.success());
    assert!(stdout(&strict).contains("tolerance: 1e-8"), "{}", stdout(&strict));
}

#[test]
fn vector_family_exports_l_plus_one_tensors() {
    let out = pencil(&["build", "--n", "2", "--m", "3", "--l", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["tensors"].as_array().unwrap().len(), 3);
    assert_eq!(doc["dim"], 9);
    assert_eq!(pencil(&["build", "--m", "4", "--l", "2"]).status.code(), Some(2));
}
