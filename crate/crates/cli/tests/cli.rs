//! End-to-end checks of the binary: exit codes, JSON shape, reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_a-geom")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("a-geom-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_json(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const IDENTITY2: &str = r#"{"rows":2,"cols":2,"data":[[1.0,0.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]]}"#;

#[test]
fn check_identity_is_isometric() {
    let dir = scratch("check");
    let form = write_json(&dir, "a.json", IDENTITY2);
    let op = write_json(&dir, "t.json", IDENTITY2);
    let out = run(&[
        "check",
        "--form",
        form.to_str().unwrap(),
        "--op",
        op.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["isometric"], serde_json::Value::Bool(true));
    assert_eq!(report["a_symmetric"], serde_json::Value::Bool(true));
}

#[test]
fn extend_forces_zero_corner() {
    let dir = scratch("extend");
    let x = write_json(
        &dir,
        "x.json",
        r#"{"rows":2,"cols":2,"data":[[0.0,0.0],[1.0,0.0],[1.0,0.0],[0.0,0.0]]}"#,
    );
    let p = write_json(
        &dir,
        "p.json",
        r#"{"rows":2,"cols":2,"data":[[1.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]]}"#,
    );
    let out = run(&[
        "extend",
        "--x",
        x.to_str().unwrap(),
        "--p",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    // The (2, 2) entry of Z must vanish: data index 3, stored as [re, im].
    let corner = &report["z"]["data"][3];
    let re = corner[0].as_f64().unwrap();
    let im = corner[1].as_f64().unwrap();
    assert!(re.abs() < 1e-6 && im.abs() < 1e-6, "corner {re} + {im}i");
    assert!(report["norm_z"].as_f64().unwrap() <= 1.0 + 1e-6);
}

#[test]
fn seq_adjoint_flags_the_odd_square_permutation() {
    let out = run(&["seq", "adjoint", "--op", "example_242_Ustar", "--horizon", "20000"]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "non_adjointable_evidence");

    let out = run(&["seq", "adjoint", "--op", "dirichlet_shift", "--horizon", "20000"]);
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "adjointable_evidence");
}

#[test]
fn seq_demo_checkpoints_are_monotone() {
    let out = run(&["seq", "demo", "--horizon", "1001"]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["monotone"], serde_json::Value::Bool(true));
    assert_eq!(report["terms"].as_u64().unwrap(), 501);
}

#[test]
fn race_reports_are_byte_identical_for_equal_seeds() {
    let dir = scratch("race");
    let form = write_json(&dir, "a.json", IDENTITY2);
    let base = write_json(&dir, "t.json", IDENTITY2);
    // V = i H for the exchange matrix H: a tangent at the identity.
    let velocity = write_json(
        &dir,
        "v.json",
        r#"{"rows":2,"cols":2,"data":[[0.0,0.0],[0.0,1.0],[0.0,1.0],[0.0,0.0]]}"#,
    );
    let args = [
        "race",
        "--form",
        form.to_str().unwrap(),
        "--base",
        base.to_str().unwrap(),
        "--velocity",
        velocity.to_str().unwrap(),
        "--t1",
        "1.0",
        "--trials",
        "16",
        "--seed",
        "5",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);

    let mut other_seed = args.to_vec();
    other_seed[12] = "6";
    let third = run(&other_seed);
    assert_ne!(first.stdout, third.stdout);
    let report = stdout_json(&first);
    assert_eq!(report["violations"].as_u64().unwrap(), 0);
}

#[test]
fn douglas_reports_unsolvable_without_failing() {
    let dir = scratch("douglas");
    let lhs = write_json(
        &dir,
        "lhs.json",
        r#"{"rows":2,"cols":2,"data":[[1.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,0.0]]}"#,
    );
    let rhs = write_json(
        &dir,
        "rhs.json",
        r#"{"rows":2,"cols":2,"data":[[0.0,0.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]]}"#,
    );
    let out = run(&[
        "douglas",
        "--lhs",
        lhs.to_str().unwrap(),
        "--rhs",
        rhs.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["solvable"], serde_json::Value::Bool(false));
}

#[test]
fn malformed_input_exits_with_code_one() {
    let dir = scratch("badinput");
    let bad = write_json(&dir, "bad.json", "{not json");
    let op = write_json(&dir, "t.json", IDENTITY2);
    let out = run(&[
        "check",
        "--form",
        bad.to_str().unwrap(),
        "--op",
        op.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert!(report["error"].as_str().unwrap().contains("bad.json"));
}

#[test]
fn unknown_sequence_operator_exits_with_code_one() {
    let out = run(&["seq", "wold", "--op", "missing_thing"]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert!(report["error"].as_str().unwrap().contains("missing_thing"));
}

#[test]
fn project_emits_the_hand_projector() {
    let dir = scratch("project");
    let form = write_json(
        &dir,
        "a.json",
        r#"{"rows":2,"cols":2,"data":[[2.0,0.0],[1.0,0.0],[1.0,0.0],[1.0,0.0]]}"#,
    );
    let basis = write_json(&dir, "f.json", r#"{"rows":2,"cols":1,"data":[[1.0,0.0],[0.0,0.0]]}"#);
    let out = run(&[
        "project",
        "--form",
        form.to_str().unwrap(),
        "--basis",
        basis.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["rank"].as_u64().unwrap(), 1);
    let q01 = report["q"]["data"][1][0].as_f64().unwrap();
    assert!((q01 - 0.5).abs() < 1e-12);
}

#[test]
fn full_suite_passes_from_the_cli() {
    let out = run(&["suite", "--seed", "0"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout_json(&out);
    assert_eq!(report["all_passed"], serde_json::Value::Bool(true));
    assert_eq!(report["outcomes"].as_array().unwrap().len(), 10);
}
