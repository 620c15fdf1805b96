//! End-to-end runs of the betaenc binary.

use std::path::Path;
use std::process::Command;

fn betaenc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_betaenc"))
}

fn run_json(args: &[&str]) -> serde_json::Value {
    let out = betaenc().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "betaenc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn encode_decode_round_trip() {
    let enc = run_json(&[
        "encode", "--beta", "1.5", "--nu", "1.3", "--x", "0.41", "--bits", "20",
    ]);
    let bits: String = enc["bits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| if b.as_u64().unwrap() == 1 { '1' } else { '0' })
        .collect();
    assert_eq!(bits.len(), 20);
    let dec = run_json(&["decode", "--beta", "1.5", "--bits", &bits]);
    let x_hat = dec["x_hat"].as_f64().unwrap();
    assert_eq!(x_hat, enc["decoded"]["midpoint"].as_f64().unwrap());
    let bound = enc["error_bound_midpoint"].as_f64().unwrap();
    assert!((x_hat - 0.41).abs() <= bound);
}

#[test]
fn estimate_beta_recovers_the_base() {
    let est = run_json(&[
        "estimate-beta", "--beta", "1.5", "--nu", "1.25", "--x", "0.37", "--bits", "32",
    ]);
    let beta_hat = est["estimates"][0]["beta_hat"].as_f64().unwrap();
    assert!((beta_hat - 1.5).abs() < 1e-4, "beta_hat = {beta_hat}");

    let est = run_json(&[
        "estimate-beta", "--flavor", "negative", "--beta", "1.5", "--nu", "1.5", "--scale", "2",
        "--x", "0.37", "--bits", "24",
    ]);
    let candidates = est["estimates"].as_array().unwrap();
    assert!(!candidates.is_empty());
    assert!(candidates
        .iter()
        .any(|e| (e["beta_hat"].as_f64().unwrap() - 1.5).abs() < 1e-3));
}

#[test]
fn markov_reports_analytic_and_empirical_chains() {
    let out = run_json(&[
        "markov", "--beta", "1.5", "--nu", "1.5", "--x", "0.4121512", "--bits", "5000",
    ]);
    assert_eq!(out["analytic"]["region"], "Middle");
    let lambda = out["analytic"]["lambda2"].as_f64().unwrap();
    assert!((lambda + 1.0 / 3.0).abs() < 1e-12);
    assert!(out["empirical"]["lambda2"].as_f64().is_some());
}

#[test]
fn kalman_embeds_and_verifies() {
    let out = run_json(&[
        "kalman", "--p11", "0.3", "--p12", "0.7", "--p21", "0.6", "--p22", "0.4",
    ]);
    assert_eq!(out["matches"], true);
    let inner = out["map"]["inner"][0].as_array().unwrap();
    assert!((inner[1].as_f64().unwrap() - 0.15).abs() < 1e-12);
}

#[test]
fn sweep_runs_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
flavor = "cautious"
betas = [1.5]
bits = 8
nu_points = 3
epsilons = [0.0]
modes = [1]
samples = 50
seed = 9
"#,
    )
    .unwrap();
    let out_csv = dir.path().join("rows.csv");
    let status = betaenc()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("flavor,beta,L,"));
    assert!(dir.path().join("rows.meta.json").exists());
}

fn reproduce(dir: &Path, name: &str, file: &str) -> Vec<u8> {
    let out = dir.join(file);
    let status = betaenc()
        .args(["reproduce", name, "--seed", "42", "--quick", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::read(&out).unwrap()
}

#[test]
fn reproduce_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = reproduce(dir.path(), "fig4", "a.csv");
    let b = reproduce(dir.path(), "fig4", "b.csv");
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn reproduce_concatenates_multi_spec_recipes() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = reproduce(dir.path(), "fig16", "f16.csv");
    let text = String::from_utf8(bytes).unwrap();
    // One cautious block then one negative block, 20 quick nu points each.
    assert_eq!(text.lines().count(), 41);
    assert_eq!(text.matches("\ncautious,").count(), 20);
    assert_eq!(text.matches("\nnegative,").count(), 20);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("f16.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["recipe"], "fig16");
    assert_eq!(meta["focus"], "mse_x");
    assert_eq!(meta["seed"], 42);
}

#[test]
fn unknown_recipe_fails_cleanly() {
    let out = betaenc().args(["reproduce", "fig5"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig5"), "stderr: {err}");
    assert!(err.contains("known recipes"), "stderr: {err}");
}

#[test]
fn flag_validation_errors_are_reported() {
    let out = betaenc()
        .args(["encode", "--flavor", "negative", "--beta", "1.5", "--nu", "1.5", "--x", "0.3"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--scale"));

    let out = betaenc()
        .args(["decode", "--beta", "1.5", "--bits", "01x1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
