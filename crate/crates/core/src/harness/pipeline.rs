//! Per-replication analyses.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{estimate, preavg_threshold_estimator, noise_variance_hat, EstimatorReport, PhiConstants};
use crate::likelihood::LikelihoodContext;
use crate::posterior::{
    adjust, equal_tail_interval, hpd_interval, hpd_samples, normal_reference, point_estimates,
    tempered_posterior_conjugate, tempered_posterior_mcmc, tv_distance, wald_interval, IntervalReport,
    NormalLaw, PriorSpec, TemperedPosterior,
};
use crate::reference::{gibbs_full_joint, marginal_theta};
use crate::rng::ReplicationSeed;
use crate::sim::{simulate_path, ModelSpec};
use crate::stats;

use super::config::ExperimentConfig;

/// One CSV row of an experiment. Columns an experiment does not produce stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub rep: usize,
    pub n: usize,
    pub status: String,
    pub reason: String,
    pub truth: f64,
    pub theta_dagger: Option<f64>,
    pub theta_tilde: Option<f64>,
    pub theta_hat: Option<f64>,
    pub theta_hat_latent: Option<f64>,
    pub jump_qv: Option<f64>,
    pub jump_qv_hat: Option<f64>,
    pub kappa: Option<f64>,
    pub prior_center: Option<f64>,
    pub post_mean: Option<f64>,
    pub post_mean_latent: Option<f64>,
    pub post_map: Option<f64>,
    pub hpd_lower: Option<f64>,
    pub hpd_upper: Option<f64>,
    pub equal_tail_lower: Option<f64>,
    pub equal_tail_upper: Option<f64>,
    pub wald_lower: Option<f64>,
    pub wald_upper: Option<f64>,
    pub clt_lower: Option<f64>,
    pub clt_upper: Option<f64>,
    pub gibbs_hpd_lower: Option<f64>,
    pub gibbs_hpd_upper: Option<f64>,
    pub jaccard: Option<f64>,
    pub tv: Option<f64>,
    pub acceptance: Option<f64>,
}

impl ReplicationRow {
    pub fn failed(rep: usize, n: usize, truth: f64, reason: String) -> Self {
        Self {
            rep,
            n,
            status: "failed".into(),
            reason,
            truth,
            ..Self::default()
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn set_interval(&mut self, iv: &IntervalReport) {
        use crate::posterior::IntervalKind::*;
        let (lo, hi) = match iv.kind {
            Hpd => (&mut self.hpd_lower, &mut self.hpd_upper),
            EqualTail => (&mut self.equal_tail_lower, &mut self.equal_tail_upper),
            WaldNormal => (&mut self.wald_lower, &mut self.wald_upper),
        };
        *lo = Some(iv.lower);
        *hi = Some(iv.upper);
    }
}

/// Material kept for plot output.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRecord {
    pub rep: usize,
    pub truth: f64,
    /// Unadjusted tempered posterior.
    pub posterior: TemperedPosterior,
    pub shift: f64,
    pub reference: NormalLaw,
    pub full_bayes: Option<Vec<f64>>,
}

pub(crate) struct Outcome {
    pub row: ReplicationRow,
    pub plot: Option<PlotRecord>,
}

/// Tempered posterior of the whole sample: conjugate when the prior allows it.
fn tempered(cfg: &ExperimentConfig, prior: &PriorSpec, ctx: &LikelihoodContext, kappa: f64, seed: ReplicationSeed) -> Result<TemperedPosterior> {
    if ctx.noise_var() == 0.0 && matches!(prior, PriorSpec::InverseGamma { .. }) {
        tempered_posterior_conjugate(prior, ctx, kappa)
    } else {
        tempered_posterior_mcmc(prior, ctx, kappa, &cfg.chain, seed)
    }
}

/// `theta_hat +/- z sd` with the threshold quarticity estimate of the variance.
fn threshold_clt(dy: &[f64], report: &EstimatorReport, cfg: &ExperimentConfig, level: f64) -> (f64, f64) {
    let eta = cfg.estimator.threshold.level(dy.len());
    let t = report.horizon();
    let quart: f64 = dy.iter().filter(|v| v.abs() <= eta).map(|v| v.powi(4)).sum();
    let sd = (2.0 * quart / (3.0 * t * t)).sqrt();
    let z = crate::posterior::std_normal_quantile(0.5 + 0.5 * level);
    (report.theta_hat - z * sd, report.theta_hat + z * sd)
}

struct NoNoise {
    report: EstimatorReport,
    posterior: TemperedPosterior,
    reference: NormalLaw,
}

fn no_noise_analysis(dy: &[f64], dt: f64, cfg: &ExperimentConfig, seed: ReplicationSeed) -> Result<NoNoise> {
    let report = estimate(dy, dt, &cfg.estimator, None)?;
    let ctx = LikelihoodContext::new(dy, dt, 0.0, cfg.estimator.bounds)?;
    let posterior = tempered(cfg, &cfg.prior, &ctx, report.kappa, seed)?;
    let reference = normal_reference(report.theta_hat_clipped, report.reference_variance())?;
    Ok(NoNoise {
        report,
        posterior,
        reference,
    })
}

fn fill_no_noise(row: &mut ReplicationRow, a: &NoNoise, dy: &[f64], jump_qv: f64, cfg: &ExperimentConfig) -> Result<()> {
    let t = a.report.horizon();
    let adjusted = adjust(&a.posterior, a.report.shift());
    let latent = adjust(&a.posterior, jump_qv / t);
    let pe = point_estimates(&adjusted);
    row.theta_tilde = Some(a.report.theta_tilde);
    row.theta_hat = Some(a.report.theta_hat);
    row.theta_hat_latent = Some(a.report.theta_tilde - jump_qv / t);
    row.jump_qv = Some(jump_qv);
    row.jump_qv_hat = Some(a.report.jump_qv_hat);
    row.kappa = Some(a.report.kappa);
    row.post_mean = Some(pe.mean);
    row.post_map = Some(pe.map);
    row.post_mean_latent = Some(point_estimates(&latent).mean);
    row.set_interval(&hpd_interval(&adjusted, cfg.level)?);
    row.set_interval(&equal_tail_interval(&adjusted, cfg.level)?);
    row.set_interval(&wald_interval(&a.reference, cfg.level)?);
    let (lo, hi) = threshold_clt(dy, &a.report, cfg, cfg.level);
    row.clt_lower = Some(lo);
    row.clt_upper = Some(hi);
    row.tv = Some(tv_distance(&adjusted, &a.reference).value);
    row.acceptance = a.posterior.chain().map(|c| c.acceptance_rate);
    Ok(())
}

fn ok_row(rep: usize, model: &ModelSpec, jump_qv: f64) -> ReplicationRow {
    ReplicationRow {
        rep,
        n: model.n,
        status: "ok".into(),
        truth: model.variance,
        theta_dagger: Some(model.variance + jump_qv / model.horizon),
        ..ReplicationRow::default()
    }
}

/// single-path, bias-study, coverage-nonoise.
pub(crate) fn run_no_noise(cfg: &ExperimentConfig, rep: usize, seed: ReplicationSeed, keep_plot: bool) -> Result<Outcome> {
    let path = simulate_path(&cfg.model, seed)?;
    let a = no_noise_analysis(&path.dy, path.dt, cfg, seed)?;
    let mut row = ok_row(rep, &cfg.model, path.jump_qv);
    fill_no_noise(&mut row, &a, &path.dy, path.jump_qv, cfg)?;
    let plot = keep_plot.then(|| PlotRecord {
        rep,
        truth: cfg.model.variance,
        shift: a.report.shift(),
        posterior: a.posterior,
        reference: a.reference,
        full_bayes: None,
    });
    Ok(Outcome { row, plot })
}

pub(crate) fn run_compare(cfg: &ExperimentConfig, rep: usize, seed: ReplicationSeed, keep_plot: bool) -> Result<Outcome> {
    let path = simulate_path(&cfg.model, seed)?;
    let a = no_noise_analysis(&path.dy, path.dt, cfg, seed)?;
    let mut row = ok_row(rep, &cfg.model, path.jump_qv);
    fill_no_noise(&mut row, &a, &path.dy, path.jump_qv, cfg)?;
    let trajectory = gibbs_full_joint(&path.dy, path.dt, &cfg.gibbs, seed)?;
    let theta = marginal_theta(&trajectory);
    let (lo, hi) = hpd_samples(&theta, cfg.level);
    row.gibbs_hpd_lower = Some(lo);
    row.gibbs_hpd_upper = Some(hi);
    let mis = (row.hpd_lower.unwrap_or(f64::NAN), row.hpd_upper.unwrap_or(f64::NAN));
    row.jaccard = Some(stats::jaccard(mis, (lo, hi)));
    let plot = keep_plot.then(|| PlotRecord {
        rep,
        truth: cfg.model.variance,
        shift: a.report.shift(),
        posterior: a.posterior,
        reference: a.reference,
        full_bayes: Some(theta),
    });
    Ok(Outcome { row, plot })
}

/// Noisy design. With a split prior, the first half of the sample centres
/// the prior and the second half drives the likelihood; the frequentist
/// estimator and its CLT interval always use the full sample.
pub(crate) fn run_noise(cfg: &ExperimentConfig, phi: &PhiConstants, rep: usize, seed: ReplicationSeed, keep_plot: bool) -> Result<Outcome> {
    let path = simulate_path(&cfg.model, seed)?;
    let dt = path.dt;
    let full = estimate(&path.dy, dt, &cfg.estimator, Some(phi))?;
    let mut row = ok_row(rep, &cfg.model, path.jump_qv);
    row.theta_hat = Some(full.theta_hat);
    row.jump_qv = Some(path.jump_qv);
    let clt = normal_reference(full.theta_hat, full.reference_variance())?.central_interval(cfg.level);
    row.clt_lower = Some(clt.0);
    row.clt_upper = Some(clt.1);

    let (data, prior) = match cfg.split_prior {
        Some(sp) => {
            let half = path.n() / 2;
            let first = &path.dy[..half];
            let center = preavg_threshold_estimator(first, dt, &cfg.estimator.preavg, noise_variance_hat(first))?.value;
            row.prior_center = Some(center);
            (&path.dy[half..], PriorSpec::TruncatedNormal { center, sd: sp.sd, lower: sp.lower })
        }
        None => (&path.dy[..], cfg.prior),
    };
    let report = estimate(data, dt, &cfg.estimator, Some(phi))?;
    // The split prior describes the diffusion variance itself, so it is placed
    // where the adjusted posterior lives: in the unshifted coordinate that is
    // the same law translated by the shift.
    let prior = match prior {
        PriorSpec::TruncatedNormal { center, sd, lower } if cfg.split_prior.is_some() => PriorSpec::TruncatedNormal {
            center: center + report.shift(),
            sd,
            lower: lower + report.shift(),
        },
        p => p,
    };
    let ctx = LikelihoodContext::new(data, dt, report.noise_var, cfg.estimator.bounds)?;
    let posterior = tempered(cfg, &prior, &ctx, report.kappa, seed)?;
    let adjusted = adjust(&posterior, report.shift());
    let reference = normal_reference(report.theta_hat_clipped, report.reference_variance())?;
    let pe = point_estimates(&adjusted);
    row.theta_tilde = Some(report.theta_tilde);
    row.jump_qv_hat = Some(report.jump_qv_hat);
    row.kappa = Some(report.kappa);
    row.post_mean = Some(pe.mean);
    row.post_map = Some(pe.map);
    row.set_interval(&hpd_interval(&adjusted, cfg.level)?);
    row.set_interval(&equal_tail_interval(&adjusted, cfg.level)?);
    row.set_interval(&wald_interval(&reference, cfg.level)?);
    row.tv = Some(tv_distance(&adjusted, &reference).value);
    row.acceptance = posterior.chain().map(|c| c.acceptance_rate);
    let plot = keep_plot.then(|| PlotRecord {
        rep,
        truth: cfg.model.variance,
        shift: report.shift(),
        posterior,
        reference,
        full_bayes: None,
    });
    Ok(Outcome { row, plot })
}

/// Rate check at one sample size: only the misspecified MLE, plus the TV
/// diagnostic when the posterior is conjugate.
pub(crate) fn run_rate(cfg: &ExperimentConfig, n: usize, rep: usize, seed: ReplicationSeed) -> Result<Outcome> {
    let model = ModelSpec { n, ..cfg.model.clone() };
    let path = simulate_path(&model, seed)?;
    let mut row = ok_row(rep, &model, path.jump_qv);
    row.jump_qv = Some(path.jump_qv);
    if model.noise_sd > 0.0 {
        let noise_var = noise_variance_hat(&path.dy);
        let ctx = LikelihoodContext::new(&path.dy, path.dt, noise_var, cfg.estimator.bounds)?;
        row.theta_tilde = Some(ctx.mle()?.theta);
    } else {
        let a = no_noise_analysis(&path.dy, path.dt, cfg, seed)?;
        row.theta_tilde = Some(a.report.theta_tilde);
        row.theta_hat = Some(a.report.theta_hat);
        row.kappa = Some(a.report.kappa);
        if a.posterior.analytic_law().is_some() {
            let adjusted = adjust(&a.posterior, a.report.shift());
            row.tv = Some(tv_distance(&adjusted, &a.reference).value);
        }
    }
    Ok(Outcome { row, plot: None })
}
