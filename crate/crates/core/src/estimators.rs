//! Frequentist correction estimators: noise variance, threshold realized
//! variance, the pre-averaged threshold estimator, the jump quadratic
//! variation estimate and the temperatures that rescale the quasi-posterior.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VolError};
use crate::likelihood::{Bounds, LikelihoodContext};
use crate::quadrature;

/// `(1/2n) sum dY^2`.
pub fn noise_variance_hat(dy: &[f64]) -> f64 {
    if dy.is_empty() {
        return 0.0;
    }
    dy.iter().map(|v| v * v).sum::<f64>() / (2.0 * dy.len() as f64)
}

/// Truncation rule `eta_n = scale * n^{-exponent}` for threshold realized variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub exponent: f64,
    #[serde(default = "one")]
    pub scale: f64,
    /// Activity index assumed for the CLT window check.
    #[serde(default)]
    pub activity_index: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ThresholdRule {
    fn default() -> Self {
        Self {
            exponent: 0.39,
            scale: 1.0,
            activity_index: 0.0,
        }
    }
}

impl ThresholdRule {
    pub fn level(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(-self.exponent)
    }

    /// `None` when the exponent lies inside `(1/(4 - 2 alpha), 1/2)`.
    pub fn clt_warning(&self) -> Option<String> {
        let lo = 1.0 / (4.0 - 2.0 * self.activity_index);
        if self.exponent > lo && self.exponent < 0.5 {
            None
        } else {
            Some(format!(
                "threshold exponent {} outside CLT window ({lo:.4}, 0.5)",
                self.exponent
            ))
        }
    }
}

/// `(1/T) sum dY^2 1{|dY| <= eta_n}`.
pub fn threshold_rv(dy: &[f64], rule: &ThresholdRule, horizon: f64) -> f64 {
    let eta = rule.level(dy.len());
    dy.iter().filter(|v| v.abs() <= eta).map(|v| v * v).sum::<f64>() / horizon
}

/// Pre-averaging weight functions on `[0, 1]` vanishing at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `min(s, 1 - s)`.
    #[default]
    Tent,
    /// `s (1 - s)`.
    Parabola,
}

impl Weight {
    pub fn value(self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Weight::Tent => s.min(1.0 - s),
            Weight::Parabola => s * (1.0 - s),
        }
    }

    pub fn derivative(self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Weight::Tent => {
                if s < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Weight::Parabola => 1.0 - 2.0 * s,
        }
    }

    /// Interior points where the derivative is not smooth.
    pub fn breakpoints(self) -> &'static [f64] {
        match self {
            Weight::Tent => &[0.5],
            Weight::Parabola => &[],
        }
    }
}

/// `g(j / k)` for `j = 1..k-1`.
pub fn window_weights(weight: Weight, k: usize) -> Vec<f64> {
    (1..k).map(|j| weight.value(j as f64 / k as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreavgConfig {
    #[serde(default)]
    pub weight: Weight,
    /// `k_n = floor(c dt^{-1/2})`.
    pub block_constant: f64,
    /// Threshold decays as `n^{-exponent}`; must lie in `(1/9, 1/4)`.
    pub threshold_exponent: f64,
    /// Threshold in units of the pilot standard deviation of the windowed sums at `n = 1`.
    pub threshold_sds: f64,
}

impl Default for PreavgConfig {
    fn default() -> Self {
        Self {
            weight: Weight::Tent,
            block_constant: 1.0 / 3.0,
            threshold_exponent: 0.2,
            threshold_sds: 4.0,
        }
    }
}

impl PreavgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.block_constant > 0.0) {
            return Err(VolError::Config("block constant must be > 0".into()));
        }
        if !(self.threshold_exponent > 1.0 / 9.0 && self.threshold_exponent < 0.25) {
            return Err(VolError::Config(format!(
                "pre-averaging threshold exponent must lie in (1/9, 1/4), got {}",
                self.threshold_exponent
            )));
        }
        if !(self.threshold_sds > 0.0) {
            return Err(VolError::Config("threshold_sds must be > 0".into()));
        }
        Ok(())
    }

    pub fn block_length(&self, dt: f64) -> usize {
        (self.block_constant / dt.sqrt()).floor() as usize
    }
}

/// Integral constants of a pre-averaging weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiConstants {
    pub block_constant: f64,
    /// `int g^2`.
    pub g_bar: f64,
    /// `int (g')^2`.
    pub g_prime_sq: f64,
    pub c1: f64,
    pub c2: f64,
    pub phi11: f64,
    pub phi12: f64,
    pub phi22: f64,
}

/// Which one-dimensional rule [`phi_constants_with`] nests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    GaussLegendre,
    Simpson,
}

pub fn phi_constants(cfg: &PreavgConfig) -> Result<PhiConstants> {
    phi_constants_with(cfg, QuadratureRule::GaussLegendre, 1e-10)
}

pub fn phi_constants_with(cfg: &PreavgConfig, rule: QuadratureRule, tol: f64) -> Result<PhiConstants> {
    cfg.validate()?;
    let g = cfg.weight;
    let integrate = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64| -> f64 {
        match rule {
            QuadratureRule::GaussLegendre => quadrature::with_breaks(quadrature::gauss_legendre, &f, a, b, breaks, tol),
            QuadratureRule::Simpson => quadrature::with_breaks(quadrature::simpson, &f, a, b, breaks, tol),
        }
    };
    let bps = g.breakpoints();
    let g_bar = integrate(&|s| g.value(s).powi(2), 0.0, 1.0, bps, tol);
    let g_prime_sq = integrate(&|s| g.derivative(s).powi(2), 0.0, 1.0, bps, tol);

    let inner_breaks = |x: f64| -> Vec<f64> { bps.iter().flat_map(|b| [*b, x + b]).collect() };
    let phi1 = |x: f64| integrate(&|y| g.derivative(y) * g.derivative(y - x), x, 1.0, &inner_breaks(x), tol * 1e-2);
    let phi2 = |x: f64| integrate(&|y| g.value(y) * g.value(y - x), x, 1.0, &inner_breaks(x), tol * 1e-2);
    let outer_breaks: Vec<f64> = bps.iter().flat_map(|b| [*b, 1.0 - b]).collect();
    let phi11 = integrate(&|x| phi1(x).powi(2), 0.0, 1.0, &outer_breaks, tol);
    let phi12 = integrate(&|x| phi1(x) * phi2(x), 0.0, 1.0, &outer_breaks, tol);
    let phi22 = integrate(&|x| phi2(x).powi(2), 0.0, 1.0, &outer_breaks, tol);

    let c = cfg.block_constant;
    let out = PhiConstants {
        block_constant: c,
        g_bar,
        g_prime_sq,
        c1: c * g_bar,
        c2: g_prime_sq / c,
        phi11,
        phi12,
        phi22,
    };
    let all = [out.g_bar, out.g_prime_sq, out.phi11, out.phi12, out.phi22];
    if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(VolError::Config("weight function gives non-finite or non-positive constants".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreavgEstimate {
    /// Raw debiased estimate; may be negative in finite samples.
    pub value: f64,
    pub block_length: usize,
    pub threshold: f64,
    pub windows_kept: usize,
    pub windows_total: usize,
    pub negative: bool,
}

impl PreavgEstimate {
    /// Companion clipped at `floor` for uses that need a positive value.
    pub fn clipped(&self, floor: f64) -> f64 {
        self.value.max(floor)
    }
}

/// `(c1, c2)` for a block of `k` with weights `w = g(j/k)`, using the
/// effective `c = k dt^{1/2}`.
pub fn finite_block_constants(w: &[f64], k: usize, dt: f64) -> (f64, f64) {
    let c = k as f64 * dt.sqrt();
    let psi2 = w.iter().map(|v| v * v).sum::<f64>() / k as f64;
    let first = w.first().copied().unwrap_or(0.0);
    let last = w.last().copied().unwrap_or(0.0);
    let diffs = w.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>();
    let psi1 = k as f64 * (first * first + diffs + last * last);
    (c * psi2, psi1 / c)
}

/// Pre-averaged threshold estimator of the diffusion variance per unit time.
pub fn preavg_threshold_estimator(
    dy: &[f64],
    dt: f64,
    cfg: &PreavgConfig,
    noise_var: f64,
) -> Result<PreavgEstimate> {
    cfg.validate()?;
    let n = dy.len();
    let k = cfg.block_length(dt);
    if k < 2 {
        return Err(VolError::Config(format!("block length {k} < 2; increase n or c")));
    }
    if k >= n {
        return Err(VolError::Config(format!("block length {k} >= n = {n}")));
    }
    let horizon = dt * n as f64;
    let w = window_weights(cfg.weight, k);
    let sums: Vec<f64> = (0..n - k)
        .map(|i| w.iter().zip(&dy[i..i + k - 1]).map(|(a, b)| a * b).sum())
        .collect();
    // Finite-k versions of c1, c2: the floor in k and the Riemann sums of the
    // weights otherwise leave an O(1/k) relative bias.
    let (c1, c2) = finite_block_constants(&w, k, dt);
    let edge = n as f64 / sums.len() as f64;
    let debias = |u: f64| (dt.sqrt() * edge * u / horizon - c2 * noise_var) / c1;

    let pilot = debias(sums.iter().map(|s| s * s).sum()).max(0.0);
    let threshold = cfg.threshold_sds
        * horizon.powf(0.25)
        * (c1 * pilot + c2 * noise_var).sqrt()
        * (n as f64).powf(-cfg.threshold_exponent);
    let (mut u, mut kept) = (0.0, 0usize);
    for s in &sums {
        if s.abs() <= threshold {
            u += s * s;
            kept += 1;
        }
    }
    let value = debias(u);
    Ok(PreavgEstimate {
        value,
        block_length: k,
        threshold,
        windows_kept: kept,
        windows_total: sums.len(),
        negative: value < 0.0,
    })
}

/// Asymptotic variance of the pre-averaged estimator.
pub fn v_noise(theta: f64, noise_var: f64, phi: &PhiConstants) -> f64 {
    let c = phi.block_constant;
    c / (phi.g_bar * phi.g_bar)
        * (4.0 * theta * theta * phi.phi22
            + 2.0 * theta * noise_var / (c * c) * phi.phi12
            + noise_var * noise_var / c.powi(4) * phi.phi11)
}

/// `T (theta_tilde - theta_hat)`; not clipped.
pub fn jump_qv_hat(theta_tilde: f64, theta_hat: f64, horizon: f64) -> f64 {
    horizon * (theta_tilde - theta_hat)
}

pub fn kappa_nonoise(theta_hat: f64, theta_tilde: f64) -> Result<f64> {
    if theta_tilde == 0.0 {
        return Err(VolError::DegenerateData("misspecified estimate is zero".into()));
    }
    Ok((theta_hat / theta_tilde).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    /// Consistent plug-in of the asymptotic variance.
    #[default]
    Plugin,
    /// Numerator with first powers of the estimate in the first two terms.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
    pub mode: KappaMode,
    /// Set when a negative estimate had to be clipped at zero.
    pub clipped: bool,
}

pub fn kappa_noise(
    sigma_hat: f64,
    noise_var: f64,
    theta_tilde: f64,
    phi: &PhiConstants,
    mode: KappaMode,
) -> Result<Kappa> {
    if !(theta_tilde > 0.0) || !(noise_var > 0.0) {
        return Err(VolError::DegenerateData(
            "temperature needs a positive misspecified estimate and noise variance".into(),
        ));
    }
    let clipped = sigma_hat < 0.0;
    let s = sigma_hat.max(0.0);
    let denom = 8.0 * theta_tilde.powf(1.5) * noise_var.sqrt();
    let c = phi.block_constant;
    let numer = match mode {
        KappaMode::Plugin => v_noise(s, noise_var, phi),
        KappaMode::Literal => {
            c / (phi.g_bar * phi.g_bar)
                * (4.0 * phi.phi22 * s
                    + 2.0 * phi.phi12 / (c * c) * s.sqrt() * noise_var
                    + phi.phi11 / c.powi(4) * noise_var * noise_var)
        }
    };
    Ok(Kappa {
        value: numer / denom,
        mode,
        clipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NoNoise,
    Noise,
}

impl Regime {
    pub fn rate_exponent(self) -> f64 {
        match self {
            Regime::NoNoise => -0.5,
            Regime::Noise => -0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub regime: Regime,
    #[serde(default)]
    pub threshold: ThresholdRule,
    #[serde(default)]
    pub preavg: PreavgConfig,
    #[serde(default)]
    pub kappa_mode: KappaMode,
    #[serde(default)]
    pub bounds: Option<Bounds>,
}

impl EstimatorSettings {
    pub fn no_noise() -> Self {
        Self {
            regime: Regime::NoNoise,
            threshold: ThresholdRule::default(),
            preavg: PreavgConfig::default(),
            kappa_mode: KappaMode::Plugin,
            bounds: None,
        }
    }

    pub fn noise() -> Self {
        Self {
            regime: Regime::Noise,
            ..Self::no_noise()
        }
    }
}

/// All point estimates of one dataset. Serialises to a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub n: usize,
    pub dt: f64,
    pub theta_tilde: f64,
    pub theta_hat: f64,
    /// `theta_hat` clipped at the lower parameter bound.
    pub theta_hat_clipped: f64,
    pub noise_var: f64,
    pub jump_qv_hat: f64,
    pub kappa: f64,
    pub kappa_mode: Option<KappaMode>,
    pub asymptotic_variance: f64,
    pub rate_exponent: f64,
    pub mle_converged: bool,
    pub mle_at_boundary: bool,
    pub negative_jump_qv: bool,
    pub negative_theta_hat: bool,
    pub warning: Option<String>,
}

impl EstimatorReport {
    pub fn horizon(&self) -> f64 {
        self.dt * self.n as f64
    }

    /// Location shift `T^{-1} [J]-hat` of the adjusted posterior.
    pub fn shift(&self) -> f64 {
        self.jump_qv_hat / self.horizon()
    }

    /// Variance of the normal reference law centred at `theta_hat`.
    pub fn reference_variance(&self) -> f64 {
        reference_variance(self.asymptotic_variance, self.rate_exponent, self.n, self.horizon())
    }
}

/// `V n^{-1}` without noise and `V (n T)^{-1/2}` with noise (`V n^{2 beta}` at `T = 1`).
pub fn reference_variance(v: f64, rate_exponent: f64, n: usize, horizon: f64) -> f64 {
    let n = n as f64;
    if rate_exponent == -0.5 {
        v / n
    } else {
        v * (n * horizon).powf(2.0 * rate_exponent)
    }
}

/// Runs the full estimation pipeline for one dataset.
pub fn estimate(dy: &[f64], dt: f64, settings: &EstimatorSettings, phi: Option<&PhiConstants>) -> Result<EstimatorReport> {
    if dy.is_empty() {
        return Err(VolError::EmptyInput);
    }
    let n = dy.len();
    let horizon = dt * n as f64;
    match settings.regime {
        Regime::NoNoise => {
            let ctx = LikelihoodContext::new(dy, dt, 0.0, settings.bounds)?;
            let mle = ctx.mle()?;
            let floor = ctx.bounds().lower;
            let theta_hat = threshold_rv(dy, &settings.threshold, horizon);
            let clipped = theta_hat.max(floor);
            let jqv = jump_qv_hat(mle.theta, theta_hat, horizon);
            Ok(EstimatorReport {
                n,
                dt,
                theta_tilde: mle.theta,
                theta_hat,
                theta_hat_clipped: clipped,
                noise_var: 0.0,
                jump_qv_hat: jqv,
                kappa: kappa_nonoise(clipped, mle.theta)?,
                kappa_mode: None,
                asymptotic_variance: 2.0 * clipped * clipped,
                rate_exponent: -0.5,
                mle_converged: mle.converged,
                mle_at_boundary: mle.boundary.is_some(),
                negative_jump_qv: jqv < 0.0,
                negative_theta_hat: theta_hat <= 0.0,
                warning: settings.threshold.clt_warning(),
            })
        }
        Regime::Noise => {
            let owned;
            let phi = match phi {
                Some(p) => p,
                None => {
                    owned = phi_constants(&settings.preavg)?;
                    &owned
                }
            };
            let noise_var = noise_variance_hat(dy);
            let ctx = LikelihoodContext::new(dy, dt, noise_var, settings.bounds)?;
            let mle = ctx.mle()?;
            let floor = ctx.bounds().lower;
            let pre = preavg_threshold_estimator(dy, dt, &settings.preavg, noise_var)?;
            let clipped = pre.clipped(floor);
            let kappa = kappa_noise(clipped, noise_var, mle.theta, phi, settings.kappa_mode)?;
            let jqv = jump_qv_hat(mle.theta, pre.value, horizon);
            Ok(EstimatorReport {
                n,
                dt,
                theta_tilde: mle.theta,
                theta_hat: pre.value,
                theta_hat_clipped: clipped,
                noise_var,
                jump_qv_hat: jqv,
                kappa: kappa.value,
                kappa_mode: Some(kappa.mode),
                asymptotic_variance: v_noise(clipped, noise_var, phi),
                rate_exponent: -0.25,
                mle_converged: mle.converged,
                mle_at_boundary: mle.boundary.is_some(),
                negative_jump_qv: jqv < 0.0,
                negative_theta_hat: pre.negative,
                warning: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_phi() -> PhiConstants {
        phi_constants(&PreavgConfig::default()).unwrap()
    }

    #[test]
    fn noise_variance_of_zero_data() {
        assert_eq!(noise_variance_hat(&[0.0; 10]), 0.0);
        assert_eq!(noise_variance_hat(&[]), 0.0);
        assert!((noise_variance_hat(&[1.0, -1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn threshold_rv_excludes_large_increments() {
        let rule = ThresholdRule {
            exponent: 0.39,
            scale: 1.0,
            activity_index: 0.0,
        };
        let dy = [0.01, -0.02, 0.015, 0.005];
        let rv: f64 = dy.iter().map(|v| v * v).sum();
        assert!((threshold_rv(&dy, &rule, 1.0) - rv).abs() < 1e-18);
        let with_jump = [0.01, 1.0, -0.02];
        assert!((threshold_rv(&with_jump, &rule, 1.0) - 5e-4).abs() < 1e-18);
        assert!(rule.clt_warning().is_none());
        let bad = ThresholdRule { exponent: 0.2, ..rule };
        assert!(bad.clt_warning().is_some());
    }

    #[test]
    fn tent_window_weights() {
        assert_eq!(window_weights(Weight::Tent, 4), vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn weight_integrals_match_closed_forms() {
        let p = default_phi();
        assert!((p.g_bar - 1.0 / 12.0).abs() < 1e-12);
        assert!((p.g_prime_sq - 1.0).abs() < 1e-12);
        assert!((p.c2 - 3.0).abs() < 1e-11);
        let q = phi_constants(&PreavgConfig {
            weight: Weight::Parabola,
            ..PreavgConfig::default()
        })
        .unwrap();
        assert!((q.g_bar - 1.0 / 30.0).abs() < 1e-12);
        assert!((q.g_prime_sq - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn phi_constants_agree_across_rules() {
        for weight in [Weight::Tent, Weight::Parabola] {
            let cfg = PreavgConfig {
                weight,
                ..PreavgConfig::default()
            };
            let a = phi_constants_with(&cfg, QuadratureRule::GaussLegendre, 1e-11).unwrap();
            let b = phi_constants_with(&cfg, QuadratureRule::Simpson, 1e-11).unwrap();
            for (x, y) in [(a.phi11, b.phi11), (a.phi12, b.phi12), (a.phi22, b.phi22)] {
                assert!((x - y).abs() < 1e-8, "{weight:?}: {x} vs {y}");
            }
            assert!(a.phi12 * a.phi12 <= a.phi11 * a.phi22);
        }
    }

    #[test]
    fn v_noise_special_cases() {
        let p = default_phi();
        let c = p.block_constant;
        let k = c / (p.g_bar * p.g_bar);
        assert!((v_noise(0.7, 0.0, &p) - k * 4.0 * 0.49 * p.phi22).abs() < 1e-14);
        assert!((v_noise(0.0, 0.01, &p) - k * 1e-4 * p.phi11 / c.powi(4)).abs() < 1e-14);
        let s: f64 = 1.7;
        let a = v_noise(0.4, 3e-3, &p);
        let b = v_noise(s * s * 0.4, s * s * 3e-3, &p);
        assert!((b - s.powi(4) * a).abs() < 1e-12 * b);
    }

    #[test]
    fn jump_qv_and_kappa_arithmetic() {
        assert_eq!(jump_qv_hat(0.3, 0.3, 1.0), 0.0);
        assert!((jump_qv_hat(0.44, 0.30, 1.0) - 0.14).abs() < 1e-15);
        assert_eq!(kappa_nonoise(0.5, 0.5).unwrap(), 1.0);
        assert!((kappa_nonoise(0.3, 0.6).unwrap() - 0.25).abs() < 1e-15);
        assert!(kappa_nonoise(0.3, 0.0).is_err());
    }

    #[test]
    fn kappa_noise_modes() {
        let p = default_phi();
        let (theta, s2) = (0.8, 1e-4);
        let k = kappa_noise(theta, s2, theta, &p, KappaMode::Plugin).unwrap();
        let want = v_noise(theta, s2, &p) / (8.0 * theta.powf(1.5) * s2.sqrt());
        assert!((k.value - want).abs() < 1e-14 * want);
        let a = kappa_noise(1.0, s2, 0.9, &p, KappaMode::Plugin).unwrap().value;
        let b = kappa_noise(1.0, s2, 0.9, &p, KappaMode::Literal).unwrap().value;
        assert!((a - b).abs() < 1e-14 * a);
        let c = kappa_noise(0.5, s2, 0.9, &p, KappaMode::Literal).unwrap().value;
        let d = kappa_noise(0.5, s2, 0.9, &p, KappaMode::Plugin).unwrap().value;
        assert!((c - d).abs() > 1e-6 * d);
        let neg = kappa_noise(-0.1, s2, 0.9, &p, KappaMode::Plugin).unwrap();
        assert!(neg.clipped);
    }

    #[test]
    fn preavg_rejects_short_samples() {
        let cfg = PreavgConfig::default();
        let err = preavg_threshold_estimator(&[0.1; 5], 0.2, &cfg, 0.0);
        assert!(matches!(err, Err(VolError::Config(_))));
        let bad = PreavgConfig {
            threshold_exponent: 0.3,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn preavg_is_invariant_to_level_shift() {
        // Adding a constant to every level leaves the increments and the estimate unchanged.
        let levels: Vec<f64> = (0..4001).map(|i| ((i * 7919) % 613) as f64 * 1e-4).collect();
        let dy: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
        let shifted: Vec<f64> = levels.iter().map(|v| v + 12.5).collect();
        let dy2: Vec<f64> = shifted.windows(2).map(|w| w[1] - w[0]).collect();
        let cfg = PreavgConfig::default();
        let a = preavg_threshold_estimator(&dy, 1.0 / 4000.0, &cfg, noise_variance_hat(&dy)).unwrap();
        let b = preavg_threshold_estimator(&dy2, 1.0 / 4000.0, &cfg, noise_variance_hat(&dy2)).unwrap();
        assert!((a.value - b.value).abs() < 1e-9 * a.value.abs().max(1.0));
    }
}
