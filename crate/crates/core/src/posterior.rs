//! Tempered quasi-posteriors for the diffusion variance.
//!
//! The posterior raises the quasi-likelihood to the power `1/kappa`, is
//! multiplied by a prior and finally translated by the estimated jump
//! contribution. Two representations exist: a shifted inverse gamma in the
//! conjugate no-noise regime, and Metropolis samples otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Result, VolError};
use crate::likelihood::LikelihoodContext;
use crate::quadrature;
use crate::rng::{ReplicationSeed, StreamRole};
use crate::stats;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn std_normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorSpec {
    InverseGamma { shape: f64, scale: f64 },
    TruncatedNormal { center: f64, sd: f64, lower: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PriorSpec::InverseGamma { shape, scale } => shape > 0.0 && scale > 0.0,
            PriorSpec::TruncatedNormal { center, sd, lower } => sd > 0.0 && center.is_finite() && lower.is_finite(),
            PriorSpec::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            PriorSpec::Exponential { rate } => rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(VolError::Config(format!("invalid prior {self:?}")))
        }
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_density(&self, theta: f64) -> f64 {
        match *self {
            PriorSpec::InverseGamma { shape, scale } => {
                if theta <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * theta.ln() - scale / theta
            }
            PriorSpec::TruncatedNormal { center, sd, lower } => {
                if theta <= lower {
                    return f64::NEG_INFINITY;
                }
                let z = (theta - center) / sd;
                let mass = 1.0 - std_normal_cdf((lower - center) / sd);
                -0.5 * z * z - sd.ln() - LN_SQRT_2PI - mass.ln()
            }
            PriorSpec::Uniform { lo, hi } => {
                if theta <= lo || theta >= hi {
                    f64::NEG_INFINITY
                } else {
                    -(hi - lo).ln()
                }
            }
            PriorSpec::Exponential { rate } => {
                if theta <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * theta
                }
            }
        }
    }
}

/// A continuous unimodal law on the real line.
pub trait Law {
    fn ln_pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;
    fn mode(&self) -> f64;
    /// Rough spread, used to place brackets and quadrature breakpoints.
    fn scale_hint(&self) -> f64;
    /// Infimum of the support.
    fn support_lower(&self) -> f64;

    fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalLaw {
    pub mean: f64,
    pub variance: f64,
}

impl NormalLaw {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `mean -/+ z sd` covering `level`.
    pub fn central_interval(&self, level: f64) -> (f64, f64) {
        let z = std_normal_quantile(0.5 + 0.5 * level);
        (self.mean - z * self.sd(), self.mean + z * self.sd())
    }
}

impl Law for NormalLaw {
    fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd();
        -0.5 * z * z - self.sd().ln() - LN_SQRT_2PI
    }
    fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mean) / self.sd())
    }
    fn quantile(&self, p: f64) -> f64 {
        self.mean + self.sd() * std_normal_quantile(p)
    }
    fn mode(&self) -> f64 {
        self.mean
    }
    fn scale_hint(&self) -> f64 {
        self.sd()
    }
    fn support_lower(&self) -> f64 {
        f64::NEG_INFINITY
    }
}

/// Law of `Y - shift` with `Y ~ InverseGamma(shape, scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedInverseGamma {
    pub shape: f64,
    pub scale: f64,
    pub shift: f64,
}

impl ShiftedInverseGamma {
    pub fn mean(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.scale / (self.shape - 1.0) - self.shift)
    }

    pub fn variance(&self) -> Option<f64> {
        (self.shape > 2.0).then(|| {
            let a = self.shape;
            self.scale * self.scale / ((a - 1.0).powi(2) * (a - 2.0))
        })
    }
}

impl Law for ShiftedInverseGamma {
    fn ln_pdf(&self, x: f64) -> f64 {
        let y = x + self.shift;
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let (a, b) = (self.shape, self.scale);
        a * b.ln() - ln_gamma(a) - (a + 1.0) * y.ln() - b / y
    }

    fn cdf(&self, x: f64) -> f64 {
        let y = x + self.shift;
        if y <= 0.0 {
            return 0.0;
        }
        let z = self.scale / y;
        if z <= 0.0 {
            return 1.0;
        }
        if !z.is_finite() {
            return 0.0;
        }
        gamma_ur(self.shape, z)
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return -self.shift;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        // bisection on ln y
        let m = self.scale / (self.shape + 1.0);
        let (mut lo, mut hi) = (m.ln() - 1.0, m.ln() + 1.0);
        while self.cdf(lo.exp() - self.shift) > p {
            lo -= 2.0 * (hi - lo);
        }
        while self.cdf(hi.exp() - self.shift) < p {
            hi += 2.0 * (hi - lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid.exp() - self.shift) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        (0.5 * (lo + hi)).exp() - self.shift
    }

    fn mode(&self) -> f64 {
        self.scale / (self.shape + 1.0) - self.shift
    }

    fn scale_hint(&self) -> f64 {
        let m = self.scale / (self.shape + 1.0);
        m / self.shape.max(1.0).sqrt()
    }

    fn support_lower(&self) -> f64 {
        -self.shift
    }
}

/// Shortest interval of mass `level` for a unimodal law, by bisection on the density level.
pub fn hpd_law<L: Law>(law: &L, level: f64) -> (f64, f64) {
    let mode = law.mode();
    let top = law.ln_pdf(mode);
    let step = law.scale_hint();
    let root = |target: f64, right: bool| -> f64 {
        // find x on one side of the mode with ln_pdf(x) = target
        let mut near = mode;
        let mut far;
        let mut width = step;
        loop {
            far = if right { mode + width } else { (mode - width).max(law.support_lower()) };
            if law.ln_pdf(far) < target || (!right && far <= law.support_lower()) || width > 1e300 {
                break;
            }
            near = far;
            width *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if mid == near || mid == far {
                break;
            }
            if law.ln_pdf(mid) >= target {
                near = mid;
            } else {
                far = mid;
            }
        }
        0.5 * (near + far)
    };
    let (mut hi_level, mut lo_level) = (top, top - 200.0);
    let mut bounds = (mode, mode);
    for _ in 0..100 {
        let mid = 0.5 * (hi_level + lo_level);
        let a = root(mid, false);
        let b = root(mid, true);
        let mass = law.cdf(b) - law.cdf(a);
        bounds = (a, b);
        if mass > level {
            lo_level = mid;
        } else {
            hi_level = mid;
        }
        if hi_level - lo_level < 1e-13 {
            break;
        }
    }
    bounds
}

pub fn equal_tail_law<L: Law>(law: &L, level: f64) -> (f64, f64) {
    let tail = 0.5 * (1.0 - level);
    (law.quantile(tail), law.quantile(1.0 - tail))
}

/// Total variation distance between two laws by quadrature with the chosen rule.
pub fn tv_laws<A: Law, B: Law>(a: &A, b: &B, rule: quadrature_rule::Rule, tol: f64) -> f64 {
    let eps = 1e-13;
    let lo = a.quantile(eps).min(b.quantile(eps));
    let hi = a.quantile(1.0 - eps).max(b.quantile(1.0 - eps));
    if !(lo.is_finite() && hi.is_finite()) {
        return f64::NAN;
    }
    let mut breaks = Vec::new();
    for (m, s) in [(a.mode(), a.scale_hint()), (b.mode(), b.scale_hint())] {
        for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
            breaks.push(m + k * s);
        }
    }
    let f = |x: f64| (a.pdf(x) - b.pdf(x)).abs();
    let integral = match rule {
        quadrature_rule::Rule::GaussLegendre => quadrature::with_breaks(quadrature::gauss_legendre, &f, lo, hi, &breaks, tol),
        quadrature_rule::Rule::Simpson => quadrature::with_breaks(quadrature::simpson, &f, lo, hi, &breaks, tol),
    };
    (0.5 * integral).clamp(0.0, 1.0)
}

pub mod quadrature_rule {
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Rule {
        GaussLegendre,
        Simpson,
    }
}

/// Reference law `N(center, variance)` of the adjusted posterior.
pub fn normal_reference(center: f64, variance: f64) -> Result<NormalLaw> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(VolError::Config(format!("reference variance must be > 0, got {variance}")));
    }
    Ok(NormalLaw { mean: center, variance })
}

/// Markov chain settings. `total` and `burn_in` count stored states; each
/// stored state is `thin` Metropolis steps apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub total: usize,
    pub burn_in: usize,
    #[serde(default = "one_usize")]
    pub thin: usize,
    /// Proposal sd on the log scale; `None` derives it from a Laplace approximation.
    #[serde(default)]
    pub proposal_sd: Option<f64>,
}

fn one_usize() -> usize {
    1
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            total: 20_000,
            burn_in: 5_000,
            thin: 1,
            proposal_sd: None,
        }
    }
}

impl ChainConfig {
    pub const MIN_KEPT: usize = 1000;

    pub fn validate(&self) -> Result<()> {
        if self.total <= self.burn_in {
            return Err(VolError::Config("chain total must exceed burn-in".into()));
        }
        if self.total - self.burn_in < Self::MIN_KEPT {
            return Err(VolError::Config(format!(
                "chain keeps {} draws; at least {} required",
                self.total - self.burn_in,
                Self::MIN_KEPT
            )));
        }
        if self.thin == 0 {
            return Err(VolError::Config("thin must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub total: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub acceptance_rate: f64,
    pub proposal_sd: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    /// Inverse gamma on the unshifted parameter.
    Analytic { shape: f64, scale: f64 },
    Empirical { samples: Vec<f64>, chain: ChainMeta },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperedPosterior {
    pub representation: Representation,
    pub kappa: f64,
    /// Accumulated location shift; the density is `base(x + shift)`.
    pub shift: f64,
}

impl TemperedPosterior {
    pub fn analytic_law(&self) -> Option<ShiftedInverseGamma> {
        match self.representation {
            Representation::Analytic { shape, scale } => Some(ShiftedInverseGamma {
                shape,
                scale,
                shift: self.shift,
            }),
            Representation::Empirical { .. } => None,
        }
    }

    pub fn samples(&self) -> Option<&[f64]> {
        match &self.representation {
            Representation::Empirical { samples, .. } => Some(samples),
            Representation::Analytic { .. } => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.representation {
            Representation::Analytic { .. } => "analytic",
            Representation::Empirical { .. } => "empirical",
        }
    }

    pub fn chain(&self) -> Option<&ChainMeta> {
        match &self.representation {
            Representation::Empirical { chain, .. } => Some(chain),
            Representation::Analytic { .. } => None,
        }
    }
}

/// Conjugate tempered posterior from sufficient statistics.
pub fn conjugate_from_stats(prior: &PriorSpec, n: usize, sum_sq: f64, dt: f64, kappa: f64) -> Result<TemperedPosterior> {
    let PriorSpec::InverseGamma { shape, scale } = *prior else {
        return Err(VolError::Regime("conjugate posterior needs an inverse gamma prior".into()));
    };
    prior.validate()?;
    if !(kappa > 0.0) {
        return Err(VolError::Config(format!("temperature must be > 0, got {kappa}")));
    }
    Ok(TemperedPosterior {
        representation: Representation::Analytic {
            shape: shape + n as f64 / (2.0 * kappa),
            scale: scale + sum_sq / (2.0 * dt * kappa),
        },
        kappa,
        shift: 0.0,
    })
}

/// Conjugate tempered posterior of a no-noise likelihood context.
pub fn tempered_posterior_conjugate(prior: &PriorSpec, ctx: &LikelihoodContext, kappa: f64) -> Result<TemperedPosterior> {
    if ctx.noise_var() > 0.0 {
        return Err(VolError::Regime(
            "noise plug-in breaks conjugacy; use the Metropolis sampler".into(),
        ));
    }
    conjugate_from_stats(prior, ctx.n(), ctx.sum_of_squares(), ctx.dt(), kappa)
}

/// Random-walk Metropolis on `ln theta` for a target given on the `theta`
/// scale. Returns every visited state and the number of accepted moves.
pub fn random_walk_log_scale<F, R>(ln_target: F, init: f64, proposal_sd: f64, steps: usize, rng: &mut R) -> (Vec<f64>, usize)
where
    F: Fn(f64) -> f64,
    R: Rng,
{
    let mut phi = init.ln();
    let mut current = ln_target(init) + phi;
    let mut accepted = 0;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        let prop = phi + proposal_sd * z;
        let cand = ln_target(prop.exp()) + prop;
        let u: f64 = rng.random();
        if cand.is_finite() && u.ln() < cand - current {
            phi = prop;
            current = cand;
            accepted += 1;
        }
        out.push(phi.exp());
    }
    (out, accepted)
}

/// Metropolis sampler for `exp(loglik / kappa) * prior`.
pub fn tempered_posterior_mcmc(
    prior: &PriorSpec,
    ctx: &LikelihoodContext,
    kappa: f64,
    chain: &ChainConfig,
    seed: ReplicationSeed,
) -> Result<TemperedPosterior> {
    prior.validate()?;
    chain.validate()?;
    if !(kappa > 0.0) {
        return Err(VolError::Config(format!("temperature must be > 0, got {kappa}")));
    }
    let bounds = ctx.bounds();
    let ln_target = |theta: f64| -> f64 {
        if !bounds.contains(theta) {
            return f64::NEG_INFINITY;
        }
        let lp = prior.ln_density(theta);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        ctx.loglik_unchecked(theta) / kappa + lp
    };

    let mle = ctx.mle()?.theta;
    let mut init = mle.clamp(bounds.lower * 1.01, bounds.upper * 0.99);
    if !ln_target(init).is_finite() {
        // fall back to the best point of a coarse grid
        init = (1..200)
            .map(|k| bounds.lower * (bounds.upper / bounds.lower).powf(k as f64 / 200.0))
            .max_by(|a, b| ln_target(*a).total_cmp(&ln_target(*b)))
            .filter(|t| ln_target(*t).is_finite())
            .ok_or_else(|| VolError::Config("no point with positive posterior density".into()))?;
    }
    let proposal = chain.proposal_sd.unwrap_or_else(|| {
        let h = ctx.hessian(init).unwrap_or(f64::NAN);
        let sd_log = (kappa / -h).sqrt() / init;
        if sd_log.is_finite() && sd_log > 0.0 {
            2.4 * sd_log
        } else {
            0.1
        }
    });

    let mut rng = seed.stream(StreamRole::Chain);
    let thin = chain.thin;
    let burn_steps = chain.burn_in * thin;
    let keep_steps = (chain.total - chain.burn_in) * thin;

    // burn-in in two halves: adapt once at the midpoint, then freeze
    let half = burn_steps / 2;
    let (first, _) = random_walk_log_scale(ln_target, init, proposal, half, &mut rng);
    let mut proposal = proposal;
    if half >= 100 {
        let logs: Vec<f64> = first.iter().map(|v| v.ln()).collect();
        let s = stats::sd(&logs);
        if s.is_finite() && s > 0.0 {
            proposal = 2.4 * s;
        }
    }
    let start = first.last().copied().unwrap_or(init);
    let (second, _) = random_walk_log_scale(ln_target, start, proposal, burn_steps - half, &mut rng);
    let start = second.last().copied().unwrap_or(start);
    let (kept, accepted) = random_walk_log_scale(ln_target, start, proposal, keep_steps, &mut rng);
    let samples: Vec<f64> = kept.iter().skip(thin - 1).step_by(thin).copied().collect();
    let acceptance_rate = accepted as f64 / keep_steps as f64;
    let warning = (!(0.05..=0.9).contains(&acceptance_rate)).then(|| {
        format!("acceptance rate {acceptance_rate:.3} outside [0.05, 0.9]; adjust proposal_sd")
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(TemperedPosterior {
        representation: Representation::Empirical {
            samples,
            chain: ChainMeta {
                total: chain.total,
                burn_in: chain.burn_in,
                thin,
                acceptance_rate,
                proposal_sd: proposal,
                warning,
            },
        },
        kappa,
        shift: 0.0,
    })
}

/// Translates the posterior so that its density becomes `old(x + shift)`.
pub fn adjust(posterior: &TemperedPosterior, shift: f64) -> TemperedPosterior {
    let mut out = posterior.clone();
    out.shift += shift;
    if let Representation::Empirical { samples, .. } = &mut out.representation {
        for s in samples.iter_mut() {
            *s -= shift;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Hpd,
    EqualTail,
    WaldNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub kind: IntervalKind,
}

impl IntervalReport {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(VolError::Config(format!("credible level must be in (0, 1), got {level}")))
    }
}

/// Shortest window of sorted samples containing `ceil(level m)` points.
pub fn hpd_samples(samples: &[f64], level: f64) -> (f64, f64) {
    let s = stats::sorted(samples);
    let m = s.len();
    let k = ((level * m as f64).ceil() as usize).clamp(1, m);
    let (mut best, mut at) = (f64::INFINITY, 0);
    for i in 0..=m - k {
        let w = s[i + k - 1] - s[i];
        if w < best {
            best = w;
            at = i;
        }
    }
    (s[at], s[at + k - 1])
}

pub fn hpd_interval(posterior: &TemperedPosterior, level: f64) -> Result<IntervalReport> {
    check_level(level)?;
    // the inverse gamma family is unimodal, so density-level bisection always applies
    let (lower, upper) = match (&posterior.analytic_law(), posterior.samples()) {
        (Some(law), _) => hpd_law(law, level),
        (None, Some(s)) => hpd_samples(s, level),
        (None, None) => unreachable!("posterior has a representation"),
    };
    Ok(IntervalReport {
        lower,
        upper,
        level,
        kind: IntervalKind::Hpd,
    })
}

pub fn equal_tail_interval(posterior: &TemperedPosterior, level: f64) -> Result<IntervalReport> {
    check_level(level)?;
    let tail = 0.5 * (1.0 - level);
    let (lower, upper) = match (&posterior.analytic_law(), posterior.samples()) {
        (Some(law), _) => equal_tail_law(law, level),
        (None, Some(s)) => {
            let s = stats::sorted(s);
            (stats::quantile_sorted(&s, tail), stats::quantile_sorted(&s, 1.0 - tail))
        }
        (None, None) => unreachable!("posterior has a representation"),
    };
    Ok(IntervalReport {
        lower,
        upper,
        level,
        kind: IntervalKind::EqualTail,
    })
}

pub fn wald_interval(reference: &NormalLaw, level: f64) -> Result<IntervalReport> {
    check_level(level)?;
    let (lower, upper) = reference.central_interval(level);
    Ok(IntervalReport {
        lower,
        upper,
        level,
        kind: IntervalKind::WaldNormal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TvMethod {
    Quadrature,
    Histogram { bins: usize, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvReport {
    pub value: f64,
    #[serde(flatten)]
    pub method: TvMethod,
}

/// Histogram TV between samples and a normal law, `ceil(2 m^{1/3})` equal-width bins.
pub fn tv_samples_normal(samples: &[f64], reference: &NormalLaw) -> TvReport {
    let m = samples.len();
    let bins = (2.0 * (m as f64).cbrt()).ceil() as usize;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let b = if width > 0.0 { ((x - lo) / width) as usize } else { 0 };
        counts[b.min(bins - 1)] += 1;
    }
    let mut total = 0.0;
    let mut inside = 0.0;
    for (b, &c) in counts.iter().enumerate() {
        let a = lo + b as f64 * width;
        let q = reference.cdf(a + width) - reference.cdf(a);
        inside += q;
        total += (c as f64 / m as f64 - q).abs();
    }
    total += (1.0 - inside).max(0.0);
    TvReport {
        value: (0.5 * total).clamp(0.0, 1.0),
        method: TvMethod::Histogram { bins, lower: lo, upper: hi },
    }
}

pub fn tv_distance(posterior: &TemperedPosterior, reference: &NormalLaw) -> TvReport {
    match (&posterior.analytic_law(), posterior.samples()) {
        (Some(law), _) => TvReport {
            value: tv_laws(law, reference, quadrature_rule::Rule::GaussLegendre, 1e-10),
            method: TvMethod::Quadrature,
        },
        (None, Some(s)) => tv_samples_normal(s, reference),
        (None, None) => unreachable!("posterior has a representation"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEstimates {
    pub mean: f64,
    pub map: f64,
    /// Kernel bandwidth used for the sample-based mode.
    pub map_bandwidth: Option<f64>,
    /// Set when the analytic mean is undefined and a sample average is reported.
    pub mean_from_samples: bool,
}

/// Mode of a Gaussian kernel density estimate with Silverman's bandwidth.
pub fn kde_mode(samples: &[f64]) -> (f64, f64) {
    let s = stats::sorted(samples);
    let h = stats::silverman_bandwidth(&s);
    let density = |x: f64| -> f64 {
        let lo = s.partition_point(|v| *v < x - 8.0 * h);
        let hi = s.partition_point(|v| *v <= x + 8.0 * h);
        s[lo..hi].iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum()
    };
    let a = stats::quantile_sorted(&s, 0.001);
    let b = stats::quantile_sorted(&s, 0.999);
    const GRID: usize = 512;
    let step = (b - a) / GRID as f64;
    let best = (0..=GRID)
        .map(|i| a + i as f64 * step)
        .max_by(|x, y| density(*x).total_cmp(&density(*y)))
        .unwrap_or(a);
    // golden-section refinement around the best grid point
    let (mut lo, mut hi) = (best - step, best + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if density(x1) < density(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    (0.5 * (lo + hi), h)
}

pub fn point_estimates(posterior: &TemperedPosterior) -> PointEstimates {
    match (&posterior.analytic_law(), posterior.samples()) {
        (Some(law), _) => match law.mean() {
            Some(mean) => PointEstimates {
                mean,
                map: law.mode(),
                map_bandwidth: None,
                mean_from_samples: false,
            },
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
                let gamma = Gamma::new(law.shape, 1.0).expect("positive shape");
                let draws: Vec<f64> = (0..20_000)
                    .map(|_| law.scale / gamma.sample(&mut rng) - law.shift)
                    .collect();
                PointEstimates {
                    mean: stats::mean(&draws),
                    map: law.mode(),
                    map_bandwidth: None,
                    mean_from_samples: true,
                }
            }
        },
        (None, Some(s)) => {
            let (map, h) = kde_mode(s);
            PointEstimates {
                mean: stats::mean(s),
                map,
                map_bandwidth: Some(h),
                mean_from_samples: false,
            }
        }
        (None, None) => unreachable!("posterior has a representation"),
    }
}

/// JSON-serialisable posterior summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub kind: String,
    pub kappa: f64,
    pub shift: f64,
    pub mean: f64,
    pub map: f64,
    pub intervals: Vec<IntervalReport>,
    pub tv_to_reference: Option<TvReport>,
    pub chain_meta: Option<ChainMeta>,
}

/// Collects point estimates, intervals and the TV diagnostic. With
/// `clip_at_zero` interval endpoints below zero are reported as zero.
pub fn summarize(
    posterior: &TemperedPosterior,
    reference: Option<&NormalLaw>,
    level: f64,
    clip_at_zero: bool,
) -> Result<PosteriorSummary> {
    let pe = point_estimates(posterior);
    let mut intervals = vec![hpd_interval(posterior, level)?, equal_tail_interval(posterior, level)?];
    if let Some(r) = reference {
        intervals.push(wald_interval(r, level)?);
    }
    if clip_at_zero {
        for iv in &mut intervals {
            iv.lower = iv.lower.max(0.0);
            iv.upper = iv.upper.max(0.0);
        }
    }
    Ok(PosteriorSummary {
        kind: posterior.kind().to_string(),
        kappa: posterior.kappa,
        shift: posterior.shift,
        mean: pe.mean,
        map: pe.map,
        intervals,
        tv_to_reference: reference.map(|r| tv_distance(posterior, r)),
        chain_meta: posterior.chain().cloned(),
    })
}
