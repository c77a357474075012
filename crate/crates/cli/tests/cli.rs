//! End-to-end checks of the binary: exit codes, report shapes, file
//! outputs, and bit-determinism of repeated runs.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subfinsler"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

const DISK: &str = r#"{"kind":"disk"}"#;
const ELLIPSE: &str = r#"{"kind":"ellipse","a":2,"b":1}"#;

#[test]
fn body_validate_reports_the_curvature_radius_floor() {
    let out = run(&["body", "validate", "--body", ELLIPSE]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert!(report["rho_min"].as_f64().unwrap() > 0.0);
    assert!((report["area"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-9);

    let out = run(&["body", "validate", "--body", r#"{"kind":"ellipse","a":2}"#]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["--json", "body", "validate", "--body", r#"{"kind":"square"}"#]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["error"]["kind"], "validation");
    assert!(err["error"]["message"].as_str().unwrap().contains("square"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["body", "validate"]).status.code(), Some(2));
    let out = run(&[
        "graph", "area", "--body", DISK, "--expr", "0", "--field", "x.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["graph", "area", "--body", DISK, "--expr", "0"]);
    assert_eq!(out.status.code(), Some(2), "missing --span must be a usage error");
}

#[test]
fn body_show_emits_gnuplot_ready_csv() {
    let out = run(&["body", "show", "--body", DISK, "--samples", "33"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,h,dh,rho,kappa,x,f,df"));
    assert_eq!(lines.count(), 33);
    // Disk row: h = rho = kappa = 1 everywhere.
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[1] - 1.0).abs() < 1e-12 && (row[3] - 1.0).abs() < 1e-12);
}

#[test]
fn wulff_generate_writes_the_mesh_and_apex_report() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("s.obj");
    let obj_str = obj.to_str().unwrap();
    let args = [
        "wulff", "generate", "--body", DISK, "--curves", "12", "--samples", "1024", "--out",
        obj_str,
    ];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let apex_t = report["apex"]["t"].as_f64().unwrap();
    assert!((apex_t - 2.0 * std::f64::consts::PI).abs() <= 1e-6);
    assert_eq!(report["apex"]["x"].as_f64().unwrap(), 0.0);

    let text = std::fs::read_to_string(&obj).unwrap();
    let vertices = text.lines().filter(|l| l.starts_with("v ")).count();
    let faces = text.lines().filter(|l| l.starts_with("f ")).count();
    assert_eq!(vertices as u64, report["vertices"].as_u64().unwrap());
    assert!(faces > 0);

    // Same config, same bytes.
    let first = std::fs::read(&obj).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read(&obj).unwrap());
}

#[test]
fn graph_area_matches_a_flat_reference() {
    let out = run(&[
        "graph", "area", "--body", DISK, "--expr", "0", "--span", "-1:1:-1:1",
    ]);
    assert!(out.status.success());
    let area = stdout_json(&out)["area"].as_f64().unwrap();
    assert!((area - 4.0).abs() < 1e-9, "flat disk area {area}");
}

#[test]
fn synthesized_patch_is_critical_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let patch = dir.path().join("patch.csv");
    let patch_str = patch.to_str().unwrap().to_owned();
    let args = [
        "synthesize", "patch", "--body", DISK, "--f-expr", "1", "--span",
        "-0.2:0.2:-0.04:0.04", "--samples", "61:31", "--curves", "81", "--pad", "0.02", "--out",
        &patch_str,
    ];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(&patch).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read(&patch).unwrap(), "synthesis must be reproducible");

    let out = run(&[
        "graph", "critical", "--body", DISK, "--field", &patch_str, "--f-expr", "1", "--tol",
        "1e-3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["critical"], Value::Bool(true));

    // The same patch is nowhere near curvature 5.
    let out = run(&[
        "graph", "critical", "--body", DISK, "--field", &patch_str, "--f-expr", "5", "--tol",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["critical"], Value::Bool(false));

    let leaf = dir.path().join("leaf.csv");
    let out = run(&[
        "flow", "trace", "--body", DISK, "--field", &patch_str, "--start", "0:0.01", "--step",
        "0.002", "--out", leaf.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&leaf).unwrap();
    assert!(text.starts_with("xi,t,g,M,f_est\n"));
    assert_eq!(stdout_json(&out)["samples"].as_u64().unwrap() as usize, text.lines().count() - 1);

    let out = run(&[
        "flow", "diagnose", "--field", &patch_str, "--start", "0:0.01", "--step", "0.002",
    ]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert!(report["verdict"].is_string());
    assert!(report["ratio_12"].as_f64().is_some());

    let fam = dir.path().join("family.csv");
    let out = run(&[
        "flow", "family", "--body", DISK, "--field", &patch_str, "--start", "0:0", "--eps",
        "-0.01:0.01", "--curves", "5", "--step", "0.002", "--out", fam.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["leaves"].as_u64(), Some(5));
    // Unit prescribed curvature shifts leaves rigidly; the chart jacobian
    // stays at 1.
    assert!((report["jacobian_min"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let text = std::fs::read_to_string(&fam).unwrap();
    assert_eq!(text.lines().filter(|l| l.is_empty()).count(), 4);
}

#[test]
fn variation_battery_reports_quotients() {
    let out = run(&[
        "graph", "variation", "--body", DISK, "--expr", "0.1*x^2", "--span", "-1:1:-1:1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    let fields = report["fields"].as_array().unwrap();
    assert!(!fields.is_empty());
    for f in fields {
        assert!(f["first_variation"].as_f64().unwrap().is_finite());
        assert!(f["volume_variation"].as_f64().unwrap() > 0.0);
    }
    assert!(report["h0_min"].as_f64().unwrap() <= report["h0_max"].as_f64().unwrap());
}

#[test]
fn analytic_leaves_diagnose_as_twice_differentiable() {
    let out = run(&[
        "flow", "diagnose", "--expr", "t", "--span", "0:1:0.05:0.3", "--start", "0.5:0.1",
        "--step", "0.001",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], Value::String("C2_CONSISTENT".into()));
}

#[test]
fn check_identities_passes_and_repeats_bit_for_bit() {
    let args = ["check", "identities", "--body", DISK, "--seed", "9"];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["projection"]["pass"], Value::Bool(true));
    assert_eq!(report["ratio"]["pass"], Value::Bool(true));
    assert_eq!(report["sweep"]["pass"], Value::Bool(true));

    let again = run(&args);
    assert_eq!(out.stdout, again.stdout, "same seed must reproduce the report bytes");
}

#[test]
fn expression_problems_are_located_and_abs_is_flagged() {
    let out = run(&[
        "graph", "area", "--body", DISK, "--expr", "x^", "--span", "-1:1:-1:1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("offset 2"), "{err}");

    let out = run(&[
        "graph", "area", "--body", DISK, "--expr", "abs(x)", "--span", "-1:1:-1:1",
    ]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("abs"), "abs must be flagged on stderr: {err}");
}

#[test]
fn thread_cap_is_honored_and_validated() {
    let out = bin()
        .args(["graph", "area", "--body", DISK, "--expr", "0", "--span", "-1:1:-1:1"])
        .env("SUBFINSLER_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let single = out.stdout.clone();

    let out = run(&["graph", "area", "--body", DISK, "--expr", "0", "--span", "-1:1:-1:1"]);
    assert_eq!(single, out.stdout, "thread count must not change the numbers");

    let out = bin()
        .args(["body", "validate", "--body", DISK])
        .env("SUBFINSLER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn field_round_trips_through_the_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    let out = run(&[
        "synthesize", "patch", "--body", DISK, "--f-expr", "1", "--span",
        "-0.2:0.2:-0.04:0.04", "--samples", "41:21", "--curves", "61", "--pad", "0.02", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Reload and re-evaluate the area twice; the file is the state.
    let a1 = area_of(&path);
    let a2 = area_of(&path);
    assert_eq!(a1, a2);
}

fn area_of(path: &Path) -> String {
    let out = run(&["graph", "area", "--body", DISK, "--field", path.to_str().unwrap()]);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}
