use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn volpost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volpost")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_estimate_posterior_round() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let out = volpost(&["simulate", "--preset", "single-path", "--seed", "5", "--out", s(&path)]);
    assert!(out.status.success());
    assert_eq!(first_line(&path), "index,t,dY,dX,dJ");
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 5001);

    // same seed, same bytes
    let again = dir.path().join("again.csv");
    volpost(&["simulate", "--preset", "single-path", "--seed", "5", "--out", s(&again)]);
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());

    let est = json(&volpost(&["estimate", s(&path)]));
    let theta_hat = est["theta_hat"].as_f64().unwrap();
    assert!((theta_hat - 0.3).abs() < 0.05, "{theta_hat}");

    let chain = dir.path().join("chain.csv");
    let post = json(&volpost(&["posterior", s(&path), "--dump-chain", s(&chain)]));
    assert_eq!(post["kind"], "analytic");
    assert!(post["intervals"].as_array().unwrap().len() >= 2);
    assert_eq!(first_line(&chain), "iter,mu,theta,p,n_jumps");
}

#[test]
fn posterior_with_noise_uses_the_sampler() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noisy.csv");
    volpost(&["simulate", "--preset", "coverage-noise", "--out", s(&path)]);
    let prior = dir.path().join("prior.json");
    fs::write(&prior, r#"{"family":"truncated_normal","center":1.0,"sd":0.06,"lower":0.0}"#).unwrap();
    let chain = dir.path().join("chain.json");
    fs::write(&chain, r#"{"total":4000,"burn_in":1000}"#).unwrap();
    let post = json(&volpost(&[
        "posterior",
        s(&path),
        "--regime",
        "noise",
        "--prior",
        s(&prior),
        "--chain",
        s(&chain),
    ]));
    assert_eq!(post["kind"], "empirical");
    let acc = post["chain_meta"]["acceptance_rate"].as_f64().unwrap();
    assert!((0.05..=0.9).contains(&acc));
}

#[test]
fn experiment_writes_tables_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let summary = json(&volpost(&[
        "experiment",
        "--preset",
        "coverage-nonoise",
        "--reps",
        "4",
        "--jobs",
        "1",
        "--seed",
        "9",
        "--out",
        s(&out),
    ]));
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["replications"], 4);
    assert_eq!(first_line(&out.join("intervals.csv")), "rep,kind,lower,upper,covers_truth");
    assert!(first_line(&out.join("rows.csv")).starts_with("rep,n,status,reason,"));
    let on_disk: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk["succeeded"], 4);
}

#[test]
fn plotdata_emits_density_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plots");
    let res = volpost(&["plotdata", "--preset", "single-path", "--out", s(&out), "--dump-paths"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(first_line(&out.join("densities.csv")), "rep,x,posterior,adjusted,reference,full_bayes");
    assert_eq!(first_line(&out.join("intervals.csv")), "rep,kind,lower,upper,covers_truth");
    assert!(out.join("paths/rep_0000.csv").exists());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let printed = json(&volpost(&["experiment", "--preset", "bias-study", "--print-config", "--reps", "7", "--jobs", "2"]));
    assert_eq!(printed["replications"], 7);
    assert_eq!(printed["jobs"], 2);

    let mut cfg = printed.clone();
    cfg["model"]["n"] = 400.into();
    let path = dir.path().join("cfg.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("o");
    let summary = json(&volpost(&["experiment", "--config", s(&path), "--reps", "3", "--out", s(&out)]));
    assert_eq!(summary["succeeded"], 3);
}

#[test]
fn too_many_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = json(&volpost(&["experiment", "--preset", "coverage-noise", "--print-config"]));
    cfg["model"]["n"] = 40.into();
    cfg["replications"] = 2.into();
    let path = dir.path().join("cfg.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = volpost(&["experiment", "--config", s(&path), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_is_an_error() {
    let out = volpost(&["estimate", "/nonexistent/path.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = volpost(&["experiment", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(1));
    let list = volpost(&["experiment", "--list-presets"]);
    assert!(String::from_utf8_lossy(&list.stdout).lines().any(|l| l == "coverage-noise"));
}
