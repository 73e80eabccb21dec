//! End-to-end runs of the `tsoracle` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tsoracle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsoracle")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = tsoracle(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tsoracle-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bounds_finite_erm_example() {
    // κ = K(1+L)(B+C)/√2 = 1 with K = 1, L = 0, B = C = 1/√2
    let b = 0.5f64.sqrt().to_string();
    let v = json(&[
        "bounds", "--theorem", "finite-erm", "-n", "100", "-k", "0", "--pred-lip", "0", "--bound-b", &b, "--dep-c", &b,
        "--candidates", "2", "--epsilon", "0.1",
    ]);
    let delta = v["delta"].as_f64().unwrap();
    assert!((delta - 4.0 * (40f64.ln() / 100.0).sqrt()).abs() < 1e-9);
    assert_eq!(v["theorem"], "finite-erm");
    assert!(v["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn bounds_missing_input_fails() {
    let out = tsoracle(&["bounds", "--theorem", "finite-gibbs", "-n", "100", "--candidates", "3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
}

#[test]
fn simulate_writes_requested_length() {
    let out = tsoracle(&["simulate", "--model", "ar1", "-n", "25", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn fit_erm_and_gibbs_report_their_fields() {
    let data = scratch("ar1.csv");
    let out = tsoracle(&["simulate", "--model", "ar1", "-n", "300", "--format", "csv", "-o", data.to_str().unwrap()]);
    assert!(out.status.success());
    let input = data.to_str().unwrap();

    let erm = json(&["fit", "--input", input, "--lags", "1", "--loss", "abs"]);
    let theta = erm["theta"].as_array().unwrap();
    assert_eq!(theta.len(), 1);
    assert!((theta[0].as_f64().unwrap() - 0.5).abs() < 0.2);

    let gibbs = json(&[
        "fit", "--input", input, "--estimator", "gibbs", "--length", "3000", "--burnin", "500", "--prior-draws", "500",
    ]);
    for key in ["lambda", "acceptance_rate", "kl_estimate", "log_Z", "theta"] {
        assert!(gibbs.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn backtest_writes_a_fan_chart() {
    let fan = scratch("fan.csv");
    let v = json(&["backtest", "--fanchart", fan.to_str().unwrap()]);
    assert!(v["mean_abs_error"].as_f64().unwrap() >= 0.0);
    let text = std::fs::read_to_string(&fan).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 7);
    assert!(header.starts_with("date,actual,"));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!tsoracle(&["experiment", "--table", "5"]).status.success());
    assert!(!tsoracle(&["fit", "--input", "/nonexistent/file.csv"]).status.success());
}

#[test]
fn sparse_gibbs_reports_inclusion_probabilities() {
    let data = scratch("sparse48.csv");
    let out = tsoracle(&["simulate", "--model", "sparse48", "-n", "500", "--format", "csv", "-o", data.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&["fit", "--input", data.to_str().unwrap(), "--family", "sparse", "--lags", "8", "--estimator", "gibbs"]);
    let inclusion = v["inclusion_probability"].as_array().unwrap();
    assert_eq!(inclusion.len(), 8);
    assert!(inclusion[3].as_f64().unwrap() > 0.9);
    assert_eq!(v["theta"].as_array().unwrap().len(), 8);
}
