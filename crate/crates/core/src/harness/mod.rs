//! Monte Carlo experiments over seeded replications.
//!
//! Replications are independent given the master seed, so they run on a
//! worker pool when the `parallel` feature is enabled and sequentially
//! otherwise. Rows are merged by replication index, which makes the output
//! independent of scheduling.

mod config;
mod output;
mod pipeline;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{phi_constants, PhiConstants, PreavgConfig, Regime};
use crate::rng::ReplicationSeed;
use crate::stats;

pub use config::{ExperimentConfig, ExperimentKind, SplitPrior, NOISE_DESIGN_STABLE_SCALE, PRESETS};
pub use output::{emit_plot_data, interval_table, write_outputs, write_rows_csv, DensityRow, IntervalRow, DENSITY_GRID};
pub use pipeline::{PlotRecord, ReplicationRow};

/// Version of the summary JSON layout.
pub const SUMMARY_SCHEMA: u32 = 1;

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Applies `f` to `0..count`, keeping index order. `jobs = 1` runs on the
/// calling thread; otherwise a pool of `jobs` workers is used (0 = all cores).
pub fn map_replications<T, F>(count: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if jobs != 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(|| (0..count).into_par_iter().map(&f).collect());
        }
    }
    let _ = jobs;
    (0..count).map(f).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub kind: String,
    pub coverage: f64,
    pub mean_width: f64,
    pub replications: usize,
    /// `sqrt(p (1 - p) / reps)`.
    pub mc_se: f64,
}

impl CoverageResult {
    pub fn from_intervals(kind: &str, intervals: &[(f64, f64)], truth: &[f64]) -> Self {
        let reps = intervals.len();
        let hits = intervals.iter().zip(truth).filter(|((lo, hi), t)| lo <= *t && *t <= hi).count();
        let p = if reps == 0 { f64::NAN } else { hits as f64 / reps as f64 };
        let widths: Vec<f64> = intervals.iter().map(|(lo, hi)| hi - lo).collect();
        Self {
            kind: kind.to_string(),
            coverage: p,
            mean_width: stats::mean(&widths),
            replications: reps,
            mc_se: (p * (1.0 - p) / reps as f64).sqrt(),
        }
    }
}

/// Bias of one point estimator against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub estimator: String,
    pub target: String,
    pub mean: f64,
    pub sd: f64,
    /// Standard error of `mean`.
    pub mc_se: f64,
    pub replications: usize,
}

impl BiasSummary {
    fn new(estimator: &str, target: &str, errors: &[f64]) -> Self {
        let sd = stats::sd(errors);
        Self {
            estimator: estimator.to_string(),
            target: target.to_string(),
            mean: stats::mean(errors),
            sd,
            mc_se: sd / (errors.len() as f64).sqrt(),
            replications: errors.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub sample_sizes: Vec<usize>,
    /// Mean of `|theta_tilde - theta_dagger|` per sample size.
    pub mean_abs_error: Vec<f64>,
    pub slope: f64,
    pub expected_slope: f64,
    /// Median TV between adjusted posterior and normal reference, when available.
    pub median_tv: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub replications: usize,
    pub jaccard_above_half: usize,
    pub median_jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub experiment: ExperimentKind,
    pub replications: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub runtime_secs: f64,
    pub truth: f64,
    pub coverage: Vec<CoverageResult>,
    pub bias: Vec<BiasSummary>,
    pub median_tv: Option<f64>,
    pub rate: Option<RateSummary>,
    pub comparison: Option<ComparisonSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ReplicationRow>,
    pub plots: Vec<PlotRecord>,
    pub summary: Summary,
}

impl ExperimentResult {
    /// True when more than [`MAX_FAILURE_RATE`] of the work units failed.
    pub fn failure_exceeded(&self) -> bool {
        let total = self.summary.succeeded + self.summary.failed;
        self.summary.failed as f64 > MAX_FAILURE_RATE * total as f64
    }
}

/// Pre-averaging constants of `cfg`, computed once per process.
pub(crate) fn phi_for(cfg: &PreavgConfig) -> Result<PhiConstants> {
    use std::sync::Mutex;
    static CACHE: Mutex<Vec<(PreavgConfig, PhiConstants)>> = Mutex::new(Vec::new());
    let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, phi)) = cache.iter().find(|(c, _)| c == cfg) {
        return Ok(*phi);
    }
    let phi = phi_constants(cfg)?;
    cache.push((*cfg, phi));
    Ok(phi)
}

/// Runs every replication of `config` and aggregates the rows.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let phi = if config.estimator.regime == Regime::Noise {
        Some(phi_for(&config.estimator.preavg)?)
    } else {
        None
    };
    let cfg = config;
    let reps = cfg.replications;
    let sizes: Vec<usize> = if cfg.experiment == ExperimentKind::RateCheck {
        cfg.sample_sizes.clone()
    } else {
        vec![cfg.model.n]
    };
    let units = sizes.len() * reps;
    let outcomes = map_replications(units, cfg.jobs, |unit| {
        let (k, rep) = (unit / reps, unit % reps);
        let n = sizes[k];
        let seed = ReplicationSeed::new(cfg.seed, unit as u64);
        let keep = rep < cfg.plot_replications;
        let res = match cfg.experiment {
            ExperimentKind::CompareFullBayes => pipeline::run_compare(cfg, rep, seed, keep),
            ExperimentKind::CoverageNoise => pipeline::run_noise(cfg, phi.as_ref().expect("noise regime"), rep, seed, keep),
            ExperimentKind::RateCheck => pipeline::run_rate(cfg, n, rep, seed),
            ExperimentKind::SinglePath | ExperimentKind::BiasStudy | ExperimentKind::CoverageNonoise => {
                pipeline::run_no_noise(cfg, rep, seed, keep)
            }
        };
        match res {
            Ok(o) => (o.row, o.plot),
            Err(e) => (ReplicationRow::failed(rep, n, cfg.model.variance, e.to_string()), None),
        }
    });
    let mut rows = Vec::with_capacity(units);
    let mut plots = Vec::new();
    for (row, plot) in outcomes {
        rows.push(row);
        plots.extend(plot);
    }
    let summary = summarize(cfg, &rows, start.elapsed().as_secs_f64());
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows,
        plots,
        summary,
    })
}

fn column<F: Fn(&ReplicationRow) -> Option<f64>>(rows: &[&ReplicationRow], f: F) -> Vec<f64> {
    rows.iter().filter_map(|r| f(r)).collect()
}

fn intervals<F: Fn(&ReplicationRow) -> Option<(f64, f64)>>(rows: &[&ReplicationRow], f: F) -> (Vec<(f64, f64)>, Vec<f64>) {
    rows.iter().filter_map(|r| f(r).map(|iv| (iv, r.truth))).unzip()
}

/// Aggregates rows into the summary; failed rows are excluded.
pub fn summarize(cfg: &ExperimentConfig, rows: &[ReplicationRow], runtime_secs: f64) -> Summary {
    let ok: Vec<&ReplicationRow> = rows.iter().filter(|r| r.is_ok()).collect();
    let mut warnings = Vec::new();
    let failed = rows.len() - ok.len();
    if failed > 0 {
        warnings.push(format!("{failed} work units failed"));
    }

    let mut coverage = Vec::new();
    let kinds: [(&str, fn(&ReplicationRow) -> Option<(f64, f64)>); 5] = [
        ("hpd", |r| Some((r.hpd_lower?, r.hpd_upper?))),
        ("equal_tail", |r| Some((r.equal_tail_lower?, r.equal_tail_upper?))),
        ("wald_normal", |r| Some((r.wald_lower?, r.wald_upper?))),
        ("clt", |r| Some((r.clt_lower?, r.clt_upper?))),
        ("full_bayes_hpd", |r| Some((r.gibbs_hpd_lower?, r.gibbs_hpd_upper?))),
    ];
    if cfg.experiment != ExperimentKind::RateCheck {
        for (kind, f) in kinds {
            let (iv, truth) = intervals(&ok, f);
            if !iv.is_empty() {
                coverage.push(CoverageResult::from_intervals(kind, &iv, &truth));
            }
        }
    }

    let mut bias = Vec::new();
    if cfg.experiment != ExperimentKind::RateCheck {
        let estimators: [(&str, &str, fn(&ReplicationRow) -> Option<f64>); 6] = [
            ("theta_hat", "truth", |r| Some(r.theta_hat? - r.truth)),
            ("post_mean", "truth", |r| Some(r.post_mean? - r.truth)),
            ("theta_hat_latent", "truth", |r| Some(r.theta_hat_latent? - r.truth)),
            ("post_mean_latent", "truth", |r| Some(r.post_mean_latent? - r.truth)),
            ("post_map", "truth", |r| Some(r.post_map? - r.truth)),
            ("theta_tilde", "theta_dagger", |r| Some(r.theta_tilde? - r.theta_dagger?)),
        ];
        for (name, target, f) in estimators {
            let e = column(&ok, f);
            if e.len() >= 2 {
                bias.push(BiasSummary::new(name, target, &e));
            }
        }
    }

    let tvs = column(&ok, |r| r.tv);
    let median_tv = (!tvs.is_empty() && cfg.experiment != ExperimentKind::RateCheck).then(|| stats::median(&tvs));

    let rate = (cfg.experiment == ExperimentKind::RateCheck).then(|| {
        let sizes = cfg.sample_sizes.clone();
        let at = |n: usize| -> Vec<&ReplicationRow> { ok.iter().copied().filter(|r| r.n == n).collect() };
        let mae: Vec<f64> = sizes
            .iter()
            .map(|&n| stats::mean(&column(&at(n), |r| Some((r.theta_tilde? - r.theta_dagger?).abs()))))
            .collect();
        let x: Vec<f64> = sizes.iter().map(|n| *n as f64).collect();
        let median_tv = if tvs.is_empty() {
            None
        } else {
            Some(sizes.iter().map(|&n| stats::median(&column(&at(n), |r| r.tv))).collect())
        };
        RateSummary {
            slope: stats::log_log_slope(&x, &mae),
            sample_sizes: sizes,
            mean_abs_error: mae,
            expected_slope: cfg.estimator.regime.rate_exponent(),
            median_tv,
        }
    });

    let comparison = (cfg.experiment == ExperimentKind::CompareFullBayes).then(|| {
        let j = column(&ok, |r| r.jaccard);
        ComparisonSummary {
            replications: j.len(),
            jaccard_above_half: j.iter().filter(|v| **v > 0.5).count(),
            median_jaccard: stats::median(&j),
        }
    });

    let low_acceptance = ok
        .iter()
        .filter(|r| r.acceptance.is_some_and(|a| !(0.05..=0.9).contains(&a)))
        .count();
    if low_acceptance > 0 {
        warnings.push(format!("{low_acceptance} chains with acceptance outside [0.05, 0.9]"));
    }
    if let Some(w) = cfg.estimator.threshold.clt_warning() {
        if cfg.estimator.regime == Regime::NoNoise {
            warnings.push(w);
        }
    }

    Summary {
        schema: SUMMARY_SCHEMA,
        experiment: cfg.experiment,
        replications: cfg.replications,
        succeeded: ok.len(),
        failed,
        runtime_secs,
        truth: cfg.model.variance,
        coverage,
        bias,
        median_tv,
        rate,
        comparison,
        warnings,
    }
}
