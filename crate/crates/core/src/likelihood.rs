//! Gaussian quasi-likelihood for the diffusion variance, written as if the
//! drift and the jumps were absent, with an optional plug-in noise variance.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VolError};
use crate::spectral::{apply_transform, one_minus_cos};

/// Open parameter interval `(lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const DEFAULT_LOWER: f64 = 1e-6;
    pub const DEFAULT_UPPER_FACTOR: f64 = 1e3;

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0) || !(upper > lower) || !upper.is_finite() {
            return Err(VolError::Config(format!(
                "parameter bounds need 0 < lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lower && theta < self.upper
    }

    fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(VolError::OutOfBounds {
                theta,
                lower: self.lower,
                upper: self.upper,
            })
        }
    }
}

/// Frozen data and plug-ins for likelihood evaluation.
///
/// With `noise_var == 0` the transform is skipped: the likelihood depends on
/// the data only through the sum of squares, which the transform preserves.
#[derive(Debug, Clone)]
pub struct LikelihoodContext {
    r2: Vec<f64>,
    offsets: Vec<f64>,
    sum_sq: f64,
    n: usize,
    dt: f64,
    noise_var: f64,
    bounds: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub theta: f64,
    pub score: f64,
    pub iterations: usize,
    pub converged: bool,
    pub boundary: Option<Boundary>,
}

impl LikelihoodContext {
    /// Builds a context from raw increments. `bounds = None` uses
    /// `(1e-6, 1e3 * realized variance)`.
    pub fn new(dy: &[f64], dt: f64, noise_var: f64, bounds: Option<Bounds>) -> Result<Self> {
        if dy.is_empty() {
            return Err(VolError::EmptyInput);
        }
        if !(dt > 0.0) || !(noise_var >= 0.0) {
            return Err(VolError::Config("need dt > 0 and noise variance >= 0".into()));
        }
        let n = dy.len();
        let sum_sq: f64 = dy.iter().map(|v| v * v).sum();
        let bounds = match bounds {
            Some(b) => b,
            None => {
                let rv = sum_sq / (dt * n as f64);
                let upper = if rv > 0.0 { Bounds::DEFAULT_UPPER_FACTOR * rv } else { 1.0 };
                Bounds::new(Bounds::DEFAULT_LOWER, upper.max(10.0 * Bounds::DEFAULT_LOWER))?
            }
        };
        let (r2, offsets) = if noise_var > 0.0 {
            let t = apply_transform(dy, dt)?;
            let r2 = t.r.iter().map(|v| v * v).collect();
            let offsets = (1..=n).map(|j| 2.0 * noise_var * one_minus_cos(n, j)).collect();
            (r2, offsets)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            r2,
            offsets,
            sum_sq,
            n,
            dt,
            noise_var,
            bounds,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n as f64
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.sum_sq
    }

    pub fn loglik(&self, theta: f64) -> Result<f64> {
        self.bounds.check(theta)?;
        Ok(self.loglik_unchecked(theta))
    }

    /// Log-likelihood without the parameter-space check; callers ensure `theta > 0`.
    pub fn loglik_unchecked(&self, theta: f64) -> f64 {
        let base = theta * self.dt;
        if self.noise_var == 0.0 {
            return -0.5 * (self.n as f64 * base.ln() + self.sum_sq / base);
        }
        let mut acc = 0.0;
        for (r2, off) in self.r2.iter().zip(&self.offsets) {
            let lam = base + off;
            acc += lam.ln() + r2 / lam;
        }
        -0.5 * acc
    }

    /// `(1/n) d loglik / d theta`.
    pub fn score(&self, theta: f64) -> Result<f64> {
        self.bounds.check(theta)?;
        Ok(self.derivatives(theta).0)
    }

    /// Second derivative of the (unnormalised) log-likelihood.
    pub fn hessian(&self, theta: f64) -> Result<f64> {
        self.bounds.check(theta)?;
        Ok(self.derivatives(theta).1 * self.n as f64)
    }

    /// Returns `(score, d score / d theta, first-term magnitude)`, all scaled by `1/n`.
    fn derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let dt = self.dt;
        let n = self.n as f64;
        let base = theta * dt;
        if self.noise_var == 0.0 {
            let s = -0.5 * dt / n * (n / base - self.sum_sq / (base * base));
            let ds = -0.5 * dt * dt / n * (-n / (base * base) + 2.0 * self.sum_sq / base.powi(3));
            return (s, ds, 0.5 * dt / base);
        }
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (r2, off) in self.r2.iter().zip(&self.offsets) {
            let lam = base + off;
            let inv = 1.0 / lam;
            let inv2 = inv * inv;
            a += inv;
            b += r2 * inv2;
            c += -inv2 + 2.0 * r2 * inv2 * inv;
        }
        (-0.5 * dt / n * (a - b), -0.5 * dt * dt / n * c, 0.5 * dt / n * a)
    }

    /// Misspecified maximum likelihood estimate.
    pub fn mle(&self) -> Result<MleReport> {
        if self.noise_var == 0.0 {
            return self.mle_closed_form();
        }
        self.mle_root()
    }

    fn mle_closed_form(&self) -> Result<MleReport> {
        if self.sum_sq == 0.0 {
            return Err(VolError::DegenerateData(
                "all increments are zero; the estimate 0 lies outside the parameter space".into(),
            ));
        }
        let theta = self.sum_sq / self.horizon();
        let boundary = if theta <= self.bounds.lower {
            Some(Boundary::Lower)
        } else if theta >= self.bounds.upper {
            Some(Boundary::Upper)
        } else {
            None
        };
        Ok(MleReport {
            theta,
            score: self.derivatives(theta).0,
            iterations: 0,
            converged: true,
            boundary,
        })
    }

    fn mle_root(&self) -> Result<MleReport> {
        if self.r2.iter().all(|v| *v == 0.0) {
            return Err(VolError::DegenerateData("all transformed increments are zero".into()));
        }
        const GRID: usize = 64;
        let (lo, hi) = (self.bounds.lower, self.bounds.upper);
        let ratio = (hi / lo).ln();
        // interior log-spaced grid
        let grid: Vec<f64> = (1..GRID).map(|k| lo * (ratio * k as f64 / GRID as f64).exp()).collect();
        let scores: Vec<f64> = grid.iter().map(|&t| self.derivatives(t).0).collect();
        let mut evaluations = GRID - 1;
        if scores[0] <= 0.0 {
            return Ok(MleReport {
                theta: grid[0],
                score: scores[0],
                iterations: evaluations,
                converged: false,
                boundary: Some(Boundary::Lower),
            });
        }
        let Some(k) = scores.windows(2).position(|w| w[0] > 0.0 && w[1] <= 0.0) else {
            return Ok(MleReport {
                theta: grid[GRID - 2],
                score: scores[GRID - 2],
                iterations: evaluations,
                converged: false,
                boundary: Some(Boundary::Upper),
            });
        };
        let (mut a, mut b) = (grid[k], grid[k + 1]);
        if scores[k + 1] == 0.0 {
            return Ok(MleReport {
                theta: b,
                score: 0.0,
                iterations: evaluations,
                converged: true,
                boundary: None,
            });
        }
        // Safeguarded Newton: keep a bracket with score(a) > 0 > score(b).
        let mut theta = (a * b).sqrt();
        let mut converged = false;
        let mut s = 0.0;
        for _ in 0..200 {
            let (score, slope, scale) = self.derivatives(theta);
            evaluations += 1;
            s = score;
            if score.abs() <= 1e-10 * scale {
                converged = true;
                break;
            }
            if score > 0.0 {
                a = theta;
            } else {
                b = theta;
            }
            if (b - a) <= 4.0 * f64::EPSILON * theta {
                converged = true;
                break;
            }
            let newton = theta - score / slope;
            theta = if slope < 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        Ok(MleReport {
            theta,
            score: s,
            iterations: evaluations,
            converged,
            boundary: None,
        })
    }
}

/// Fisher information of the noisy quasi-likelihood, `1 / (8 theta^{3/2} sigma)`.
pub fn fisher_info(theta: f64, noise_sd: f64) -> Result<f64> {
    if !(noise_sd > 0.0) {
        return Err(VolError::Regime(
            "noise sd is zero; use the no-noise normal reference".into(),
        ));
    }
    if !(theta > 0.0) {
        return Err(VolError::Config(format!("theta must be > 0, got {theta}")));
    }
    Ok(1.0 / (8.0 * theta.powf(1.5) * noise_sd))
}
