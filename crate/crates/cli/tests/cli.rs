use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn expfam(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expfam"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("example.json"), r#"{"nu": [1, 4, 1], "A": [[0, 1, 2]]}"#).unwrap();
    fs::write(dir.path().join("pairs.json"), r#"{"partition": [[0, 1], [2, 3]]}"#).unwrap();
    fs::write(dir.path().join("p.json"), "[0.7, 0.1, 0.1, 0.1]").unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"nu": [1, 1], "A": [[0, "x"]]}"#).unwrap();
    dir
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn maximize_reports_two_maxima_and_is_deterministic() {
    let dir = setup();
    let a = expfam(&["maximize", "--family", "example.json", "--seed", "3"], dir.path());
    let b = expfam(&["maximize", "--family", "example.json", "--seed", "3"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["result"]["local_maxima"].as_array().unwrap().len(), 2);
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["config"]["tol"], 1e-9);
}

#[test]
fn oracle_cross_check_agrees() {
    let dir = setup();
    let out = expfam(&["maximize", "--family", "pairs.json", "--oracle", "--starts", "8"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["oracle"]["agrees"], true);
}

#[test]
fn build_output_is_a_family_file() {
    let dir = setup();
    let out = expfam(&["build", "--family", "pairs.json", "--out", "built.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let again = expfam(&["build", "--family", "built.json"], dir.path());
    let v = json(&again);
    assert_eq!(v["A"], serde_json::json!([[1, 1, 0, 0], [0, 0, 1, 1]]));
}

#[test]
fn divergence_and_projection() {
    let dir = setup();
    let out = expfam(&["divergence", "--family", "pairs.json", "--dist", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let expected = 0.7 * (0.7f64 / 0.4).ln() + 0.1 * (0.1f64 / 0.4).ln();
    assert!((v["result"]["divergence"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(v["result"]["in_closure"], false);

    let out = expfam(&["project", "--family", "pairs.json", "--dist", "p.json"], dir.path());
    let point: Vec<f64> = serde_json::from_value(json(&out)["result"]["point"].clone()).unwrap();
    for (a, b) in point.iter().zip([0.4, 0.4, 0.1, 0.1]) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn circuits_membership_and_decompose() {
    let dir = setup();
    let out = expfam(&["circuits", "--family", "pairs.json", "--dist", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["circuits"].as_array().unwrap().len(), 2);
    assert_eq!(v["result"]["membership"]["member"], false);

    let out = expfam(&["decompose", "--family", "pairs.json"], dir.path());
    let v = json(&out);
    assert_eq!(v["result"]["coparallel_classes"].as_array().unwrap().len(), 2);
    assert_eq!(v["result"]["components"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_passes_on_homogeneous_partition() {
    let dir = setup();
    let out = expfam(&["verify", "--family", "pairs.json", "--starts", "16"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(
        json(&out)["result"]["equality_case"]["verdict"],
        "partition model of a homogeneous partition"
    );
}

#[test]
fn scan_csv_rows() {
    let dir = setup();
    let out = expfam(&["scan", "--n", "4", "--k", "1", "--samples", "4", "--starts", "8", "--format", "csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family_id,N,k,maxD,bound");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("partition-2-2,4,1,"));
}

#[test]
fn errors_exit_with_one() {
    let dir = setup();
    let bad = expfam(&["maximize", "--family", "bad.json"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("A[0][1]"));
    assert_eq!(expfam(&["maximize", "--family", "missing.json"], dir.path()).status.code(), Some(1));
    assert_eq!(expfam(&["project", "--family", "pairs.json"], dir.path()).status.code(), Some(1));
    assert_eq!(expfam(&["build", "--family", "pairs.json", "--format", "csv"], dir.path()).status.code(), Some(1));
    assert_eq!(expfam(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(expfam(&["scan", "--n", "9", "--k", "1"], dir.path()).status.code(), Some(1));
}
