use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use fbdsde::cli::RunManifest;
use serde_json::Value;

fn fbdsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbdsde"))
        .args(args)
        .env_remove("FBDSDE_OUT")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "timing.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn missing_problem_source_is_a_usage_error() {
    assert_eq!(code(&fbdsde(&["solve"])), 2);
    assert_eq!(code(&fbdsde(&["no-such-command"])), 2);
}

#[test]
fn unknown_catalog_entry_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbdsde(&["solve", "--catalog", "nope", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn control_outside_the_admissible_set_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbdsde(&[
        "solve", "--catalog", "decoupled-constant", "--control", "99", "--steps", "5", "--paths", "10",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn unreadable_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbdsde(&["solve", "--config", "/nonexistent/pack.toml", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 4);
}

#[test]
fn solve_writes_the_constant_solution_and_a_hashed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbdsde(&[
        "solve", "--catalog", "decoupled-constant", "--steps", "10", "--paths", "50",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("report.json"));
    for node in report["Y"].as_array().unwrap() {
        assert!((node["mean"][0].as_f64().unwrap() - 5.0).abs() <= 1e-6);
    }
    let manifest = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.exit_code, 0);
    let names: Vec<_> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["state.csv", "report.json"]);
    for f in &manifest.files {
        let bytes = std::fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(f.sha256, fbdsde::cli::sha256_hex(&bytes));
    }
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fbdsde"))
        .args(["solve", "--catalog", "decoupled-constant", "--steps", "5", "--paths", "10"])
        .env("FBDSDE_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn audit_classifies_the_anti_monotone_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbdsde(&[
        "audit", "--catalog", "anti-monotone", "--steps", "10", "--paths", "100",
        "--monotonicity-samples", "2000", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let verdict = read_json(&dir.path().join("verdict.json"));
    assert_eq!(verdict["monotonicity"]["regime"], "A1'");
}

#[test]
fn strict_audit_fails_on_a_suboptimal_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbdsde(&[
        "audit", "--catalog", "monotone-dissipative", "--control", "0.5", "--probe", "0", "--steps", "10",
        "--paths", "100", "--monotonicity-samples", "1000", "--strict", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let verdict = read_json(&dir.path().join("verdict.json"));
    assert_eq!(verdict["overall"], "not-certified");
}

#[test]
fn replay_reproduces_every_artifact() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let out = fbdsde(&[
        "adjoint", "--catalog", "monotone-dissipative", "--control", "0.25", "--steps", "10", "--paths", "100",
        "--out", first.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.path().join("manifest.json");
    let out = fbdsde(&["replay", "--manifest", manifest.to_str().unwrap(), "--out", second.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(contents(first.path()), contents(second.path()));
}

#[test]
fn verify_example_is_byte_for_byte_deterministic() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut codes = Vec::new();
    for dir in [&first, &second] {
        let out = fbdsde(&["verify-example", "--x", "1", "--paths", "300", "--out", dir.path().to_str().unwrap()]);
        codes.push(code(&out));
    }
    assert_eq!(codes[0], codes[1]);
    let a = contents(first.path());
    assert!(a.contains_key("state.csv") && a.contains_key("adjoint.csv") && a.contains_key("checks.json"));
    assert_eq!(a, contents(second.path()));
}
