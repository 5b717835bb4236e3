use volpost::harness::{self, emit_plot_data, interval_table, write_outputs, write_rows_csv, ExperimentConfig};

fn small(preset: &str, reps: usize, n: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(preset).unwrap();
    cfg.replications = reps;
    cfg.model.n = n;
    cfg
}

fn rows_csv(cfg: &ExperimentConfig) -> Vec<u8> {
    let res = harness::run(cfg).unwrap();
    let mut buf = Vec::new();
    write_rows_csv(&res.rows, &mut buf).unwrap();
    buf
}

#[test]
fn serial_and_pooled_runs_are_byte_identical() {
    let mut cfg = small("coverage-nonoise", 12, 800);
    cfg.jobs = 1;
    let serial = rows_csv(&cfg);
    cfg.jobs = 3;
    let pooled = rows_csv(&cfg);
    assert_eq!(serial, pooled);
}

#[test]
fn seed_changes_the_rows() {
    let mut cfg = small("coverage-nonoise", 4, 500);
    let a = rows_csv(&cfg);
    cfg.seed += 1;
    assert_ne!(a, rows_csv(&cfg));
}

#[test]
fn density_curves_integrate_to_one() {
    let cfg = ExperimentConfig::preset("single-path").unwrap();
    let res = harness::run(&cfg).unwrap();
    let rows = emit_plot_data(&res.plots);
    assert_eq!(rows.len(), harness::DENSITY_GRID);
    let trapezoid = |f: &dyn Fn(usize) -> f64| -> f64 {
        (1..rows.len()).map(|i| 0.5 * (f(i) + f(i - 1)) * (rows[i].x - rows[i - 1].x)).sum()
    };
    for (name, mass) in [
        ("posterior", trapezoid(&|i| rows[i].posterior)),
        ("adjusted", trapezoid(&|i| rows[i].adjusted)),
        ("reference", trapezoid(&|i| rows[i].reference)),
    ] {
        assert!((mass - 1.0).abs() < 1e-3, "{name}: {mass}");
    }
}

#[test]
fn outputs_have_fixed_headers_and_schema() {
    let cfg = small("coverage-nonoise", 3, 500);
    let res = harness::run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&res, dir.path()).unwrap();

    let intervals = std::fs::read_to_string(dir.path().join("intervals.csv")).unwrap();
    assert_eq!(intervals.lines().next(), Some("rep,kind,lower,upper,covers_truth"));
    assert_eq!(intervals.lines().count(), 1 + interval_table(&res.rows).len());

    let rows = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert!(rows.starts_with("rep,n,status,reason,truth,"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["experiment"], "coverage-nonoise");
    assert_eq!(summary["succeeded"], 3);
}

#[test]
fn every_preset_validates() {
    for name in harness::PRESETS {
        ExperimentConfig::preset(name).unwrap().validate().unwrap();
    }
    assert!(ExperimentConfig::preset("nope").is_err());
}

#[test]
fn failed_replications_are_recorded_not_fatal() {
    // two observations cannot hold a pre-averaging block
    let mut cfg = small("coverage-noise", 2, 40);
    cfg.chain.total = 1500;
    cfg.chain.burn_in = 500;
    let res = harness::run(&cfg).unwrap();
    assert_eq!(res.summary.failed, 2);
    assert!(res.failure_exceeded());
    assert!(res.rows.iter().all(|r| r.status == "failed" && !r.reason.is_empty()));
}

#[test]
fn config_json_round_trips() {
    let cfg = ExperimentConfig::preset("coverage-noise").unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(cfg, back);
}
