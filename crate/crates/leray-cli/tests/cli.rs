//! End-to-end tests of the `leray` binary: exit codes, report schemas,
//! determinism and config precedence.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_leray"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("leray-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn blowup_json_contract() {
    let out = run(&[
        "reproduce-blowup",
        "--family",
        "quad",
        "--p",
        "2",
        "--deltas",
        "0.2,0.1,0.05,0.025",
        "--seed",
        "42",
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // contract: {slope, target, tolerance, rows[]}
    let slope = v["slope"].as_f64().unwrap();
    assert!((slope - v["fit"]["slope"].as_f64().unwrap()).abs() < 1e-15);
    assert!((v["target"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!((v["tolerance"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!(row["delta"].is_f64());
        assert!(row["ratio"].is_f64());
        assert!(row["lognorm_num"].is_f64());
        assert!(row["lognorm_den"].is_f64());
    }
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
    assert_eq!(v["all_pass"], true);
}

#[test]
fn power_m_out_of_range_is_usage_error() {
    let out = run(&["reproduce-blowup", "--family", "power", "--m", "2.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["reproduce-blowup", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn deterministic_reruns_and_thread_invariance() {
    let dir = tmpdir("det");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    let c = dir.join("c.json");
    let base = [
        "reproduce-blowup",
        "--family",
        "quad",
        "--deltas",
        "0.2,0.1,0.05",
        "--orders",
        "8,8,8",
        "--outer-order",
        "4",
        "--seed",
        "42",
    ];
    let mut args_a: Vec<&str> = base.to_vec();
    args_a.extend(["--threads", "1", "--output", a.to_str().unwrap()]);
    assert!(run(&args_a).status.success());
    // identical rerun of the exact same command
    let first = std::fs::read(&a).unwrap();
    assert!(run(&args_a).status.success());
    assert_eq!(first, std::fs::read(&a).unwrap(), "rerun changed bytes");
    let mut args_b: Vec<&str> = base.to_vec();
    args_b.extend(["--threads", "2", "--output", b.to_str().unwrap()]);
    assert!(run(&args_b).status.success());
    // env-var route for the thread count
    let mut cmd = bin();
    cmd.args(base).args(["--output", c.to_str().unwrap()]);
    cmd.env("LERAY_THREADS", "2");
    assert!(cmd.output().unwrap().status.success());
    let fa = std::fs::read(&a).unwrap();
    let fb = std::fs::read(&b).unwrap();
    let fc = std::fs::read(&c).unwrap();
    assert_eq!(fa, fb, "thread count changed emitted bytes");
    assert_eq!(fa, fc, "env-var thread count changed emitted bytes");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_schema_blowup() {
    let out = run(&[
        "reproduce-blowup",
        "--deltas",
        "0.2,0.1,0.05",
        "--orders",
        "8,8,8",
        "--outer-order",
        "4",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("delta,ratio,lognorm_num,lognorm_den\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn identity_json_schema() {
    let out = run(&["verify-identities", "--seed", "42"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert!(row["id"].is_string());
        assert!(row["lhs"].is_number());
        assert!(row["rhs"].is_number());
        assert!(row["abs_err"].is_number());
        assert!(row["pass"].is_boolean());
    }
    assert_eq!(v["all_pass"], true);
}

#[test]
fn output_to_missing_directory_fails_without_partial_file() {
    let out = run(&[
        "verify-convexity",
        "--samples",
        "1000",
        "--output",
        "/nonexistent-dir-xyz/report.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!PathBuf::from("/nonexistent-dir-xyz").exists());
}

#[test]
fn config_file_precedence() {
    let dir = tmpdir("cfg");
    let cfg = dir.join("leray.toml");
    std::fs::write(&cfg, "p = 4.0\ndeltas = [0.2, 0.1, 0.05]\norders = [8, 8, 8]\nouter_order = 4\n").unwrap();
    // config alone sets p = 4
    let out = run(&[
        "reproduce-blowup",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["p"].as_f64().unwrap(), 4.0);
    // flag wins over the config file
    let out = run(&[
        "reproduce-blowup",
        "--config",
        cfg.to_str().unwrap(),
        "--p",
        "2",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["p"].as_f64().unwrap(), 2.0);
    // malformed config is a usage error
    std::fs::write(&cfg, "p = \"not a number\"").unwrap();
    let out = run(&["reproduce-blowup", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
