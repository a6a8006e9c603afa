use std::path::Path;
use std::process::{Command, Output};

fn hrf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrf")).args(args).current_dir(cwd).output().unwrap()
}

const SMALL: &str = r#"{
  "pointwise": { "thetas": [0.5, 1.5], "r_list": [1.0], "samples": 200 },
  "mse_verify": { "trials": 200, "thetas": [1.0], "r_list": [1.0] },
  "cluster_bench": { "m_list": [8], "repetitions": 2, "eval_points": 8 }
}"#;

#[test]
fn pointwise_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL).unwrap();
    let a = hrf(&["pointwise", "--seed", "1", "--config", "cfg.json", "--out", "a.csv"], dir.path());
    let b = hrf(&["pointwise", "--seed", "1", "--config", "cfg.json", "--out", "b.csv", "--workers", "2"], dir.path());
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("theta,r,estimator_id,"));
}

#[test]
fn unknown_subcommand_fails() {
    let out = hrf(&["frobnicate"], Path::new("."));
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_config_is_an_error() {
    let out = hrf(&["flops", "--config", "/nonexistent/cfg.json"], Path::new("."));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn flops_table_on_stdout() {
    let out = hrf(&["flops"], Path::new("."));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("estimator_id,d,m,n,model_mul_add"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL).unwrap();
    let out = hrf(&["mse-verify", "--config", "cfg.json", "--format", "json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r["closed_form"].as_f64().unwrap() >= 0.0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trig: max relative deviation"));
}

#[test]
fn cluster_bench_runs_small() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), SMALL).unwrap();
    let out = hrf(&["cluster-bench", "--seed", "3", "--config", "cfg.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).any(|l| l.contains("hybrid_cluster")));
}
