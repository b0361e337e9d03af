use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qftkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qftkit")).args(args).env_remove("QFTKIT_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qftkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn build_then_stats() {
    let path = scratch("std3.qc");
    let p = path.to_str().unwrap();
    assert!(qftkit(&["build", "--kind", "standard", "--n", "3", "--out", p]).status.success());
    let o = qftkit(&["stats", p, "--json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["size"], 6);
    assert!(v["depth"].as_u64().unwrap() <= 5);
    assert_eq!(v["gate_histogram"]["cp"], 3);
    assert_eq!(v["error_bound"], 0.0);
    let keys = ["\"n\"", "\"size\"", "\"depth\"", "\"width\"", "\"gate_histogram\"", "\"error_bound\"", "\"measured_error\"", "\"seed\""];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "key order {text}");
    // already in h/p/cp form, so lowering changes nothing
    let plain = stdout(&qftkit(&["stats", p]));
    assert!(plain.contains("lowered to h/p/cp: size 6 depth"), "{plain}");
}

#[test]
fn sim_matches_fourier_column() {
    let path = scratch("split4.qc");
    let p = path.to_str().unwrap();
    for kind in ["standard", "split"] {
        assert!(qftkit(&["build", "--kind", kind, "--n", "3", "--out", p]).status.success());
        let v: Value = serde_json::from_str(&stdout(&qftkit(&["sim", p, "--input", "101"]))).unwrap();
        let amps = v["amplitudes"].as_array().unwrap();
        assert_eq!(amps.len(), 8);
        for (y, a) in amps.iter().enumerate() {
            let ang = 2.0 * std::f64::consts::PI * (5 * y) as f64 / 8.0;
            let (re, im) = (ang.cos() / 8f64.sqrt(), ang.sin() / 8f64.sqrt());
            assert!((a[0].as_f64().unwrap() - re).abs() < 1e-9 && (a[1].as_f64().unwrap() - im).abs() < 1e-9);
        }
        assert!(v["measured_error"].as_f64().unwrap() < 1e-9);
    }
    assert_eq!(qftkit(&["sim", p, "--input", "10"]).status.code(), Some(2));
    assert_eq!(qftkit(&["sim", p, "--input", "1x1"]).status.code(), Some(2));
}

#[test]
fn measured_circuit_records_outcomes() {
    let path = scratch("ld2.qc");
    let p = path.to_str().unwrap();
    assert!(qftkit(&["build", "--kind", "logdepth", "--n", "2", "--k", "2", "--out", p]).status.success());
    let a = stdout(&qftkit(&["sim", p, "--input", "0001", "--shots", "5", "--seed", "4"]));
    let b = stdout(&qftkit(&["sim", p, "--input", "0001", "--shots", "5", "--seed", "4"]));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    let total: u64 = v["shots"].as_object().unwrap().values().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 5);
}

#[test]
#[allow(clippy::approx_constant)]
fn verify_bounds_reports_constants() {
    let o = qftkit(&["verify", "--suite", "bounds", "--json"]);
    assert!(o.status.success());
    let rows: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let get = |name: &str| rows.iter().find(|r| r["check"] == name).unwrap()["value"].as_f64().unwrap();
    let p = get("cos product lower");
    assert!(p > 0.6366 && p < 0.6367);
    assert!(get("trace distance n<=20") < 0.7712);
    assert!(get("min max probability") >= 0.853553);
    assert!(rows.iter().all(|r| r["passed"] == true));
}

#[test]
fn verify_other_suites_pass() {
    for suite in ["unitary", "arith", "moduli"] {
        let o = qftkit(&["verify", "--suite", suite, "--n", "4"]);
        assert!(o.status.success(), "{suite}: {}", stdout(&o));
    }
    assert!(qftkit(&["verify", "--suite", "phase", "--n", "6", "--seed", "9"]).status.success());
}

#[test]
fn factor_fifteen_on_gates() {
    for qft in ["standard", "logdepth"] {
        let o = qftkit(&["factor", "15", "--backend", "gate", "--qft", qft, "--seed", "2"]);
        assert!(o.status.success());
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let d = v["divisor"].as_u64().unwrap();
        assert!(d == 3 || d == 5);
    }
}

#[test]
fn seed_flag_and_env_agree() {
    let a = stdout(&qftkit(&["factor", "33", "--seed", "77"]));
    let b = Command::new(env!("CARGO_BIN_EXE_qftkit")).args(["factor", "33"]).env("QFTKIT_SEED", "77").output().unwrap();
    assert_eq!(a, stdout(&b));
    assert_eq!(a, stdout(&qftkit(&["factor", "33", "--seed", "77"])));
}

#[test]
fn exhausted_retries_exit_one() {
    let o = qftkit(&["factor", "15", "--base", "14", "--max-retries", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["divisor"].is_null());
    assert_eq!(v["trace"][0]["a"], 14);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qftkit(&["build", "--kind", "nope", "--n", "3"]).status.code(), Some(2));
    assert_eq!(qftkit(&["build", "--kind", "standard", "--n", "0"]).status.code(), Some(2));
    assert_eq!(qftkit(&["build", "--kind", "logdepth", "--n", "4", "--k", "3"]).status.code(), Some(2));
    assert_eq!(qftkit(&["stats", "/nonexistent/file.qc"]).status.code(), Some(2));
    assert_eq!(qftkit(&["factor", "13"]).status.code(), Some(2));
    assert_eq!(qftkit(&[]).status.code(), Some(2));
}

#[test]
fn accept_quick_prints_every_criterion() {
    let o = qftkit(&["accept", "--quick"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion ")).count(), 8);
    assert!(text.lines().all(|l| l.contains(" PASS ")));
}
