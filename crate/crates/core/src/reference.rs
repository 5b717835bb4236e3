//! Full-joint Gibbs sampler for a drifted Brownian motion with Bernoulli
//! compound jumps of uniform size on (-1, 1).
//!
//! Serves as the exactly specified benchmark against which the tempered
//! posterior is compared. Observations are noise-free increments.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, VolError};
use crate::posterior::{std_normal_cdf, std_normal_quantile};
use crate::rng::{ReplicationSeed, StreamRole};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Hyperparameters: `mu ~ N(mu_mean, mu_var)`, `theta ~ IG(theta_shape,
/// theta_scale)`, `p ~ Beta(p_alpha, p_beta)` with `p` the per-increment jump
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsPriors {
    pub mu_mean: f64,
    pub mu_var: f64,
    pub theta_shape: f64,
    pub theta_scale: f64,
    pub p_alpha: f64,
    pub p_beta: f64,
}

impl Default for GibbsPriors {
    fn default() -> Self {
        Self {
            mu_mean: 0.0,
            mu_var: 1.0,
            theta_shape: 1.0,
            theta_scale: 1.0,
            p_alpha: 1.0,
            p_beta: 199.0,
        }
    }
}

impl GibbsPriors {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_alpha > 0.0 && self.p_beta > 0.0) {
            return Err(VolError::Config(format!(
                "jump probability prior Beta({}, {}) does not live on (0, 1)",
                self.p_alpha, self.p_beta
            )));
        }
        if !(self.mu_var > 0.0 && self.theta_shape > 0.0 && self.theta_scale > 0.0) {
            return Err(VolError::Config("Gibbs prior scales must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub burn_in: usize,
    #[serde(default)]
    pub priors: GibbsPriors,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iterations: 12_000,
            burn_in: 2_000,
            priors: GibbsPriors::default(),
        }
    }
}

/// Current values of all unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub mu: f64,
    pub theta: f64,
    pub p: f64,
    pub b: Vec<bool>,
    /// Jump sizes; only meaningful where `b` is set.
    pub xi: Vec<f64>,
}

/// One stored row of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub iter: usize,
    pub mu: f64,
    pub theta: f64,
    pub p: f64,
    pub n_jumps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<ChainRow>,
    pub burn_in: usize,
    pub last: JointState,
}

/// `Phi(a) - Phi(b)` for `a > b`, using upper tails when both are positive.
fn normal_mass(b: f64, a: f64) -> f64 {
    if b > 0.0 {
        0.5 * (erfc(b / std::f64::consts::SQRT_2) - erfc(a / std::f64::consts::SQRT_2))
    } else {
        std_normal_cdf(a) - std_normal_cdf(b)
    }
}

/// Posterior probability that increment `x` contains a jump.
pub fn indicator_probability(x: f64, mu: f64, theta: f64, dt: f64, p: f64) -> f64 {
    let s = (theta * dt).sqrt();
    let r = x - mu * dt;
    let ln_none = (1.0 - p).ln() - 0.5 * (r / s).powi(2) - s.ln() - LN_SQRT_2PI;
    let ln_jump = p.ln() + (0.5 * normal_mass((r - 1.0) / s, (r + 1.0) / s)).ln();
    let d = ln_none - ln_jump;
    if d.is_nan() {
        return 0.0;
    }
    1.0 / (1.0 + d.exp())
}

/// Draw from `N(mean, sd^2)` truncated to `(lo, hi)`.
fn truncated_normal<R: Rng>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
    // work in the lower tail, where the CDF keeps relative precision
    let (flip, a, b) = if a > 0.0 { (true, -b, -a) } else { (false, a, b) };
    let z = if b < -8.0 {
        -tail_exponential(-b, -a, rng)
    } else {
        let (fa, fb) = (std_normal_cdf(a), std_normal_cdf(b));
        let u: f64 = rng.random();
        std_normal_quantile(fa + u * (fb - fa)).clamp(a, b)
    };
    let z = if flip { -z } else { z };
    (mean + sd * z).clamp(lo, hi)
}

/// Standard normal restricted to `(l, u)` with `l > 0` large, by rejection
/// from a translated exponential proposal.
fn tail_exponential<R: Rng>(l: f64, u: f64, rng: &mut R) -> f64 {
    let rate = 0.5 * (l + (l * l + 4.0).sqrt());
    loop {
        let e: f64 = rng.random::<f64>();
        let z = l - (1.0 - e).ln() / rate;
        if z >= u {
            continue;
        }
        let v: f64 = rng.random();
        if v.ln() <= -0.5 * (z - rate).powi(2) {
            return z;
        }
    }
}

impl JointState {
    /// Starting point: drift and variance from the raw moments, no jumps.
    pub fn initial(dx: &[f64], dt: f64, priors: &GibbsPriors) -> Self {
        let n = dx.len();
        let m = dx.iter().sum::<f64>() / n as f64;
        let v = dx.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        Self {
            mu: m / dt,
            theta: (v / dt).max(1e-8),
            p: priors.p_alpha / (priors.p_alpha + priors.p_beta),
            b: vec![false; n],
            xi: vec![0.0; n],
        }
    }

    pub fn n_jumps(&self) -> usize {
        self.b.iter().filter(|b| **b).count()
    }

    /// One systematic scan over all blocks.
    pub fn sweep<R: Rng>(&mut self, dx: &[f64], dt: f64, priors: &GibbsPriors, rng: &mut R) -> Result<()> {
        let n = dx.len();
        let s = (self.theta * dt).sqrt();
        for i in 0..n {
            let prob = indicator_probability(dx[i], self.mu, self.theta, dt, self.p);
            let u: f64 = rng.random();
            self.b[i] = u < prob;
            if self.b[i] {
                self.xi[i] = truncated_normal(dx[i] - self.mu * dt, s, -1.0, 1.0, rng);
            }
        }

        let z: Vec<f64> = dx
            .iter()
            .zip(self.b.iter().zip(&self.xi))
            .map(|(x, (b, xi))| if *b { x - xi } else { *x })
            .collect();
        let precision = 1.0 / priors.mu_var + n as f64 * dt / self.theta;
        let mean = (priors.mu_mean / priors.mu_var + z.iter().sum::<f64>() / self.theta) / precision;
        let e: f64 = rng.sample(StandardNormal);
        self.mu = mean + e / precision.sqrt();

        let ss: f64 = z.iter().map(|v| (v - self.mu * dt).powi(2)).sum();
        let shape = priors.theta_shape + 0.5 * n as f64;
        let rate = priors.theta_scale + ss / (2.0 * dt);
        let g = Gamma::new(shape, 1.0).map_err(|e| VolError::Config(e.to_string()))?;
        self.theta = rate / g.sample(rng);

        let k = self.n_jumps() as f64;
        let beta = Beta::new(priors.p_alpha + k, priors.p_beta + n as f64 - k).map_err(|e| VolError::Config(e.to_string()))?;
        self.p = beta.sample(rng).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        Ok(())
    }

    fn row(&self, iter: usize) -> ChainRow {
        ChainRow {
            iter,
            mu: self.mu,
            theta: self.theta,
            p: self.p,
            n_jumps: self.n_jumps(),
        }
    }
}

/// Runs the Gibbs sampler on noise-free increments `dx`.
pub fn gibbs_full_joint(dx: &[f64], dt: f64, config: &GibbsConfig, seed: ReplicationSeed) -> Result<Trajectory> {
    config.priors.validate()?;
    if dx.is_empty() {
        return Err(VolError::EmptyInput);
    }
    if config.iterations <= config.burn_in {
        return Err(VolError::Config("iterations must exceed burn-in".into()));
    }
    let mut rng: ChaCha8Rng = seed.stream(StreamRole::Gibbs);
    let mut state = JointState::initial(dx, dt, &config.priors);
    let mut rows = Vec::with_capacity(config.iterations);
    for iter in 0..config.iterations {
        state.sweep(dx, dt, &config.priors, &mut rng)?;
        rows.push(state.row(iter));
    }
    Ok(Trajectory {
        rows,
        burn_in: config.burn_in,
        last: state,
    })
}

/// The `theta` coordinate after burn-in.
pub fn marginal_theta(trajectory: &Trajectory) -> Vec<f64> {
    trajectory.rows[trajectory.burn_in..].iter().map(|r| r.theta).collect()
}

pub fn write_chain_csv<W: Write>(rows: &[ChainRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use crate::stats;
    use rand::SeedableRng;

    fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
        (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    #[test]
    fn indicator_probability_matches_quadrature() {
        let (mu, theta, dt, p) = (1.0, 10.0, 2e-4, 0.005);
        for x in [0.0, 0.05, 0.3, -0.7, 0.99, 1.2] {
            let v = theta * dt;
            let f = |y: f64| 0.5 * normal_pdf(x, mu * dt + y, v);
            let s = v.sqrt();
            let breaks: Vec<f64> = (-20..=20).map(|k| x - mu * dt + 0.5 * k as f64 * s).collect();
            let integral = quadrature::with_breaks(quadrature::gauss_legendre, &f, -1.0, 1.0, &breaks, 1e-14);
            let none = normal_pdf(x, mu * dt, v);
            let want = p * integral / (p * integral + (1.0 - p) * none);
            let got = indicator_probability(x, mu, theta, dt, p);
            assert!((got - want).abs() < 1e-10, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn truncated_normal_stays_inside_and_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..50_000).map(|_| truncated_normal(0.98, 0.05, -1.0, 1.0, &mut rng)).collect();
        assert!(draws.iter().all(|d| (-1.0..=1.0).contains(d)));
        // mean of N(0.98, 0.05^2) truncated above at 1
        let a: f64 = (1.0 - 0.98) / 0.05;
        let phi = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let want = 0.98 - 0.05 * phi / std_normal_cdf(a);
        assert!((stats::mean(&draws) - want).abs() < 5e-4);
        let far: Vec<f64> = (0..20_000).map(|_| truncated_normal(1.5, 0.05, -1.0, 1.0, &mut rng)).collect();
        assert!(far.iter().all(|d| *d > 0.9 && *d <= 1.0));
        // (1 - x)/sd is approximately exponential with rate (1.5 - 1)/sd = 10
        let gap: Vec<f64> = far.iter().map(|d| (1.0 - d) / 0.05).collect();
        assert!((stats::mean(&gap) - 1.0 / (10.0 + 1.0 / 10.0)).abs() < 2e-3);
    }

    #[test]
    fn invalid_beta_prior_is_rejected() {
        let cfg = GibbsConfig {
            priors: GibbsPriors { p_alpha: 0.0, ..GibbsPriors::default() },
            ..GibbsConfig::default()
        };
        assert!(matches!(gibbs_full_joint(&[0.1, 0.2], 0.5, &cfg, ReplicationSeed::new(1, 0)), Err(VolError::Config(_))));
    }

    #[test]
    fn projection_and_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dx: Vec<f64> = (0..200).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
        let cfg = GibbsConfig { iterations: 300, burn_in: 100, priors: GibbsPriors::default() };
        let t = gibbs_full_joint(&dx, 0.01, &cfg, ReplicationSeed::new(3, 0)).unwrap();
        let th = marginal_theta(&t);
        assert_eq!(th.len(), 200);
        assert!(th.iter().all(|v| *v > 0.0));
        let again = gibbs_full_joint(&dx, 0.01, &cfg, ReplicationSeed::new(3, 0)).unwrap();
        assert_eq!(t.rows, again.rows);
        let mut buf = Vec::new();
        write_chain_csv(&t.rows[..2], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("iter,mu,theta,p,n_jumps\n"));
    }

    // successive-conditional simulator: alternate a Gibbs sweep with a fresh
    // draw of the data given all unknowns; the parameter marginals must stay
    // at the prior
    #[test]
    fn successive_conditional_keeps_prior_moments() {
        let priors = GibbsPriors {
            mu_mean: 0.0,
            mu_var: 1.0,
            theta_shape: 4.0,
            theta_scale: 3.0,
            p_alpha: 2.0,
            p_beta: 5.0,
        };
        let (n, dt) = (20usize, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut state = JointState {
            mu: 0.0,
            theta: 1.0,
            p: 2.0 / 7.0,
            b: vec![false; n],
            xi: vec![0.0; n],
        };
        let mut dx = vec![0.0; n];
        let steps = 200_000;
        let (mut mu, mut th, mut p) = (Vec::with_capacity(steps), Vec::with_capacity(steps), Vec::with_capacity(steps));
        for _ in 0..steps {
            for i in 0..n {
                state.b[i] = rng.random::<f64>() < state.p;
                state.xi[i] = rng.random_range(-1.0..1.0);
                let e: f64 = rng.sample(StandardNormal);
                dx[i] = state.mu * dt + if state.b[i] { state.xi[i] } else { 0.0 } + (state.theta * dt).sqrt() * e;
            }
            state.sweep(&dx, dt, &priors, &mut rng).unwrap();
            mu.push(state.mu);
            th.push(state.theta);
            p.push(state.p);
        }
        // prior moments: N(0,1); IG(4,3) mean 1, E[theta^2] = 9/6 = 1.5; Beta(2,5) mean 2/7, E[p^2] = 6/56
        let checks: [(&str, &Vec<f64>, f64, f64); 3] = [("mu", &mu, 0.0, 1.0), ("theta", &th, 1.0, 1.5), ("p", &p, 2.0 / 7.0, 6.0 / 56.0)];
        for (name, x, m1, m2) in checks {
            let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
            let se1 = stats::batch_means_se(x, 50);
            let se2 = stats::batch_means_se(&sq, 50);
            let d1 = (stats::mean(x) - m1).abs();
            let d2 = (stats::mean(&sq) - m2).abs();
            assert!(d1 < 3.0 * se1, "{name} first moment drift {d1} vs se {se1}");
            assert!(d2 < 3.0 * se2, "{name} second moment drift {d2} vs se {se2}");
        }
    }
}
