use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn levelset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelset"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn solve_quad1d() {
    let out = levelset(&["solve", "--problem", "quad1d", "--r", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((num(&v["lambda_hat"]) - 1.0).abs() < 1e-6);
    assert!((num(&v["x_hat"][0]) - 0.5).abs() < 1e-6);
}

#[test]
fn window_quad2d() {
    let v = json(&levelset(&["window", "--problem", "quad2d_c34"]));
    assert_eq!(num(&v["alpha"]), 0.0);
    assert_eq!(num(&v["beta"]), 25.0);
}

#[test]
fn window_violation_exits_2() {
    let out = levelset(&["solve", "--problem", "quad2d_c34", "--r", "30"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "WindowViolation");
}

#[test]
fn infinite_window_ends_are_strings() {
    let v = json(&levelset(&["window", "--problem", "quad1d"]));
    assert_eq!(v["sup_phi"], "inf");
    assert_eq!(v["sup_phi_on_mb"], "-inf");
    let dual = levelset(&["dual-window", "--problem", "finite3"]);
    assert_eq!(dual.status.code(), Some(2));
    assert_eq!(json(&dual)["error"]["code"], "DualInapplicable");
}

#[test]
fn bracket_failure_carries_samples() {
    let out = levelset(&["solve", "--problem", "finite3", "--r", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["code"], "BracketFailure");
    assert!(!v["error"]["samples"].as_array().unwrap().is_empty());
}

#[test]
fn minimax_verdicts() {
    let out = levelset(&[
        "verify-minimax",
        "--problem",
        "quad1d",
        "--r",
        "0.25",
        "--x-grid",
        "-2:2:4001",
        "--lambda-grid",
        "0.5:2:301",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "EqualityHolds");
    let out = levelset(&["verify-minimax", "--problem", "quad1d", "--r", "0.25", "--lambda-grid", "0.5:2:3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["key"], "--x-grid");
}

#[test]
fn wellposed_and_scan() {
    let out = levelset(&["wellposed", "--problem", "quad2d_c34", "--r", "4", "--trials", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "Pass");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = levelset(&["scan", "--problem", "quad2d_c34", "--points", "5", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(csv.starts_with("r,lambda_hat,x1,x2,j_value\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn curve_csv_and_problems() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = levelset(&["curve", "--problem", "quad1d", "--grid", "0.5,1,3", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,phi,j,m"));
    let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|t| t.parse().unwrap()).collect();
    assert_eq!(row, vec![1.0, 0.25, 0.25, 0.5]);
    let v = json(&levelset(&["problems"]));
    assert_eq!(v.as_array().unwrap().len(), 5);
}

#[test]
fn missing_problem_and_bad_flags() {
    let out = levelset(&["window"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "ConfigError");
    let out = levelset(&["curve", "--problem", "quad1d", "--grid", "2,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "InvalidArgument");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn config_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "expr.json",
        r#"{"name": "c34", "domain": {"kind": "euclidean", "dimension": 2},
            "objectives": {"j": "(x1-3)^2 + (x2-4)^2", "phi": "x1^2 + x2^2"},
            "interval": {"a": 0, "b": "inf"},
            "bounds": {"inf_phi": 0, "sup_phi": "inf"},
            "solver": {"seed": 3}}"#,
    );
    let out = levelset(&["solve", "--problem", &cfg, "--r", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert!((num(&v["x_hat"][0]) - 1.2).abs() < 1e-5 && (num(&v["x_hat"][1]) - 1.6).abs() < 1e-5);

    write(dir.path(), "t.csv", "label,J,Phi\np0,0,2\np1,1,1\np2,4,0\n");
    let cfg = write(
        dir.path(),
        "table.json",
        r#"{"domain": {"kind": "finite", "table": "t.csv"}, "interval": {"a": "-inf", "b": "inf"}}"#,
    );
    let v = json(&levelset(&["window", "--problem", &cfg]));
    assert_eq!((num(&v["alpha"]), num(&v["beta"])), (0.0, 2.0));

    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"objectives": {"builtin": "quad1d"}, "solver": {"k_startz": 3}}"#,
    );
    let out = levelset(&["window", "--problem", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["error"]["code"], "ConfigError");
    assert_eq!(v["error"]["key"], "solver.k_startz");
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.k_startz"));

    let cfg = write(
        dir.path(),
        "syntax.json",
        r#"{"domain": {"kind": "euclidean", "dimension": 1},
            "objectives": {"j": "(x1 - 1", "phi": "x1^2"}, "interval": {"a": 0, "b": 1}}"#,
    );
    let v = json(&levelset(&["window", "--problem", &cfg]));
    assert_eq!(v["error"]["code"], "SyntaxError");
    assert_eq!(v["error"]["key"], "objectives.j");
}

#[test]
fn outputs_are_byte_identical() {
    let runs: Vec<Vec<(String, Vec<u8>)>> = ["1", "3"]
        .iter()
        .map(|jobs| {
            let dir = tempfile::tempdir().unwrap();
            let d = dir.path().to_str().unwrap();
            let commands: [&[&str]; 6] = [
                &["solve", "--problem", "grid_variational", "--r", "0.004"],
                &["curve", "--problem", "grid_variational", "--grid", "0.5,1,2,4,8"],
                &["scan", "--problem", "quad2d_c34", "--points", "5"],
                &["wellposed", "--problem", "quad2d_c34", "--r", "4", "--trials", "6"],
                &["dual-solve", "--problem", "quad2d_c34", "--r", "9"],
                &["limit-zero", "--problem", "quad2d_c34"],
            ];
            for c in commands {
                let mut args = c.to_vec();
                args.extend(["--seed", "11", "--jobs", jobs, "--out", d]);
                let out = levelset(&args);
                assert_eq!(out.status.code(), Some(0), "{c:?}");
            }
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            files
        })
        .collect();
    assert_eq!(runs[0].len(), 8);
    assert_eq!(runs[0], runs[1]);
}
