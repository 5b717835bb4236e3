use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VolError};
use crate::estimators::{EstimatorSettings, Regime, ThresholdRule};
use crate::posterior::{ChainConfig, PriorSpec};
use crate::reference::GibbsConfig;
use crate::sim::{JumpFamily, JumpSpec, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CompareFullBayes,
    SinglePath,
    BiasStudy,
    CoverageNonoise,
    CoverageNoise,
    RateCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CompareFullBayes => "compare-full-bayes",
            ExperimentKind::SinglePath => "single-path",
            ExperimentKind::BiasStudy => "bias-study",
            ExperimentKind::CoverageNonoise => "coverage-nonoise",
            ExperimentKind::CoverageNoise => "coverage-noise",
            ExperimentKind::RateCheck => "rate-check",
        }
    }
}

/// Prior centred on an estimate from the first half of the data; inference
/// then uses the second half only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPrior {
    pub sd: f64,
    #[serde(default)]
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelSpec,
    pub estimator: EstimatorSettings,
    #[serde(default = "default_prior")]
    pub prior: PriorSpec,
    #[serde(default)]
    pub split_prior: Option<SplitPrior>,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub gibbs: GibbsConfig,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores, 1 runs sequentially.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Sample sizes visited by `rate-check`; `model.n` is ignored there.
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    /// Replications whose posteriors are kept for plot data.
    #[serde(default = "default_plot_reps")]
    pub plot_replications: usize,
}

fn default_prior() -> PriorSpec {
    PriorSpec::InverseGamma { shape: 1.0, scale: 1.0 }
}

fn default_level() -> f64 {
    0.95
}

fn default_plot_reps() -> usize {
    10
}

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: &[&str] = &[
    "compare-full-bayes",
    "single-path",
    "bias-study",
    "coverage-nonoise",
    "coverage-noise",
    "rate-check",
    "rate-check-noise",
    "bvm-trend",
];

/// Scale of the symmetric stable jumps in the noisy design: the unit-time
/// stable law, matching the unit-scale Brownian part. After trimming, the
/// jump contribution to the quadratic variation is of order 1e-8.
pub const NOISE_DESIGN_STABLE_SCALE: f64 = 1.0;

fn vg_model(n: usize) -> ModelSpec {
    ModelSpec {
        drift: 0.1,
        variance: 0.3,
        jump: JumpSpec {
            family: JumpFamily::VarianceGamma {
                drift: -0.2,
                diffusion: 0.2,
                scale: 0.23,
            },
            center: false,
        },
        noise_sd: 0.0,
        horizon: 1.0,
        n,
        aux_resolution: crate::sim::DEFAULT_AUX_RESOLUTION,
    }
}

fn cp_model(drift: f64, variance: f64, bernoulli: bool, noise_sd: f64, n: usize) -> ModelSpec {
    ModelSpec {
        drift,
        variance,
        jump: JumpSpec {
            family: JumpFamily::CompoundPoisson {
                rate: 5.0,
                lo: -1.0,
                hi: 1.0,
                bernoulli_approx: bernoulli,
            },
            center: false,
        },
        noise_sd,
        horizon: 1.0,
        n,
        aux_resolution: crate::sim::DEFAULT_AUX_RESOLUTION,
    }
}

impl ExperimentConfig {
    fn base(experiment: ExperimentKind, model: ModelSpec, estimator: EstimatorSettings, replications: usize) -> Self {
        Self {
            experiment,
            model,
            estimator,
            prior: default_prior(),
            split_prior: None,
            chain: ChainConfig::default(),
            gibbs: GibbsConfig::default(),
            replications,
            seed: 20_240_601,
            out: None,
            jobs: 0,
            level: default_level(),
            sample_sizes: Vec::new(),
            plot_replications: default_plot_reps(),
        }
    }

    /// Desk-scale versions of the simulation designs.
    pub fn preset(name: &str) -> Result<Self> {
        let cfg = match name {
            "compare-full-bayes" => {
                // with theta = 10 the default level n^-0.39 sits below one
                // diffusion sd; the scale keeps the cut near 4.6 sd
                let mut est = EstimatorSettings::no_noise();
                est.threshold = ThresholdRule {
                    scale: 6.0,
                    ..ThresholdRule::default()
                };
                Self::base(ExperimentKind::CompareFullBayes, cp_model(1.0, 10.0, true, 0.0, 5000), est, 10)
            }
            "single-path" => Self::base(ExperimentKind::SinglePath, vg_model(5000), EstimatorSettings::no_noise(), 1),
            "bias-study" => Self::base(ExperimentKind::BiasStudy, vg_model(5000), EstimatorSettings::no_noise(), 1000),
            "coverage-nonoise" => {
                Self::base(ExperimentKind::CoverageNonoise, vg_model(5000), EstimatorSettings::no_noise(), 500)
            }
            "coverage-noise" => {
                let model = ModelSpec {
                    drift: 0.0,
                    variance: 1.0,
                    jump: JumpSpec {
                        family: JumpFamily::TrimmedStable {
                            index: 0.5,
                            scale: NOISE_DESIGN_STABLE_SCALE,
                            trim: 0.02,
                        },
                        center: false,
                    },
                    noise_sd: 0.01,
                    horizon: 2.0,
                    n: 15_600,
                    aux_resolution: crate::sim::DEFAULT_AUX_RESOLUTION,
                };
                let mut cfg = Self::base(ExperimentKind::CoverageNoise, model, EstimatorSettings::noise(), 200);
                cfg.prior = PriorSpec::TruncatedNormal {
                    center: 1.0,
                    sd: 0.06,
                    lower: 0.0,
                };
                cfg.split_prior = Some(SplitPrior { sd: 0.06, lower: 0.0 });
                cfg
            }
            "rate-check" => {
                let mut cfg = Self::base(ExperimentKind::RateCheck, cp_model(0.0, 1.0, false, 0.0, 1000), EstimatorSettings::no_noise(), 100);
                cfg.sample_sizes = vec![1000, 4000, 16_000, 64_000];
                cfg
            }
            "rate-check-noise" => {
                let mut cfg = Self::base(ExperimentKind::RateCheck, cp_model(0.0, 1.0, false, 0.2, 1000), EstimatorSettings::noise(), 100);
                cfg.sample_sizes = vec![1000, 4000, 16_000, 64_000];
                cfg
            }
            "bvm-trend" => {
                let mut cfg = Self::base(ExperimentKind::RateCheck, vg_model(500), EstimatorSettings::no_noise(), 50);
                cfg.sample_sizes = vec![500, 2000, 8000, 32_000];
                cfg
            }
            other => {
                return Err(VolError::Config(format!(
                    "unknown preset {other}; choose one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(VolError::Config("replications must be >= 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(VolError::Config(format!("level must be in (0, 1), got {}", self.level)));
        }
        self.model.validate()?;
        self.prior.validate()?;
        self.estimator.preavg.validate()?;
        self.gibbs.priors.validate()?;
        let needs_chain = self.estimator.regime == Regime::Noise && self.experiment != ExperimentKind::RateCheck
            || !matches!(self.prior, PriorSpec::InverseGamma { .. });
        if needs_chain {
            self.chain.validate()?;
        }
        if let Some(sp) = self.split_prior {
            if !(sp.sd > 0.0) {
                return Err(VolError::Config("split prior sd must be > 0".into()));
            }
        }
        match self.experiment {
            ExperimentKind::RateCheck => {
                if self.sample_sizes.len() < 2 {
                    return Err(VolError::Config("rate-check needs at least two sample sizes".into()));
                }
            }
            ExperimentKind::CoverageNoise => {
                if self.estimator.regime != Regime::Noise || self.model.noise_sd <= 0.0 {
                    return Err(VolError::Config("coverage-noise needs a noisy model and the noise regime".into()));
                }
            }
            ExperimentKind::CompareFullBayes => {
                if self.model.noise_sd > 0.0 {
                    return Err(VolError::Config("full-Bayes comparison is defined without noise".into()));
                }
                if self.gibbs.iterations <= self.gibbs.burn_in {
                    return Err(VolError::Config("gibbs iterations must exceed burn-in".into()));
                }
            }
            _ => {
                if self.estimator.regime != Regime::NoNoise {
                    return Err(VolError::Config(format!(
                        "{} runs in the no-noise regime",
                        self.experiment.name()
                    )));
                }
            }
        }
        Ok(())
    }
}
