//! Sample paths of a drifted Brownian motion plus a pure-jump Lévy part,
//! observed on a regular grid with additive i.i.d. Gaussian noise.
//!
//! Besides the observed increments every [`SamplePath`] keeps the latent
//! uncontaminated increments, the latent jump increments and the quadratic
//! variation of the jump part, so experiments can compare estimators with
//! the truth.

use std::f64::consts::FRAC_PI_2;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Exp1, Gamma, Poisson, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VolError};
use crate::rng::{ReplicationSeed, StreamRole};

/// Default refinement of the auxiliary grid used for jump quadratic variation.
pub const DEFAULT_AUX_RESOLUTION: usize = 64;

/// Jump component families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpFamily {
    None,
    /// Rate `rate` per unit time, sizes uniform on `(lo, hi)`. With
    /// `bernoulli_approx` each increment carries at most one jump, present
    /// with probability `rate * dt`.
    CompoundPoisson {
        rate: f64,
        lo: f64,
        hi: f64,
        #[serde(default)]
        bernoulli_approx: bool,
    },
    /// `a G_t + b B_{G_t}` with gamma subordinator `G_h ~ Gamma(h / c, c)`.
    VarianceGamma {
        drift: f64,
        diffusion: f64,
        scale: f64,
    },
    /// Symmetric stable increments with the `floor(trim * n)` largest
    /// observation-grid increments (in absolute value) set to zero.
    TrimmedStable { index: f64, scale: f64, trim: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    #[serde(flatten)]
    pub family: JumpFamily,
    /// Subtract the analytic per-increment mean of the jump part.
    #[serde(default)]
    pub center: bool,
}

impl JumpSpec {
    pub fn none() -> Self {
        Self {
            family: JumpFamily::None,
            center: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            JumpFamily::None => Ok(()),
            JumpFamily::CompoundPoisson { rate, lo, hi, .. } => {
                if !(rate >= 0.0) || !rate.is_finite() {
                    return Err(VolError::Config(format!("jump rate must be >= 0, got {rate}")));
                }
                if !(lo < hi) {
                    return Err(VolError::Config(format!(
                        "jump size bounds need lo < hi, got ({lo}, {hi})"
                    )));
                }
                Ok(())
            }
            JumpFamily::VarianceGamma { scale, drift, diffusion } => {
                if !(scale > 0.0) || !drift.is_finite() || !diffusion.is_finite() {
                    return Err(VolError::Config(format!(
                        "variance gamma needs subordinator scale > 0, got {scale}"
                    )));
                }
                Ok(())
            }
            JumpFamily::TrimmedStable { index, scale, trim } => {
                if !(index > 0.0 && index < 2.0) {
                    return Err(VolError::Config(format!("stable index must be in (0, 2), got {index}")));
                }
                if !(scale > 0.0) {
                    return Err(VolError::Config(format!("stable scale must be > 0, got {scale}")));
                }
                if !(0.0..1.0).contains(&trim) {
                    return Err(VolError::Config(format!("trim fraction must be in [0, 1), got {trim}")));
                }
                Ok(())
            }
        }
    }

    /// Analytic mean of one jump increment over a step of length `dt`.
    pub fn increment_mean(&self, dt: f64) -> f64 {
        match self.family {
            JumpFamily::None | JumpFamily::TrimmedStable { .. } => 0.0,
            JumpFamily::CompoundPoisson { rate, lo, hi, .. } => rate * dt * 0.5 * (lo + hi),
            JumpFamily::VarianceGamma { drift, .. } => drift * dt,
        }
    }

    /// Blumenthal–Getoor index of the family.
    pub fn activity_index(&self) -> f64 {
        match self.family {
            JumpFamily::None | JumpFamily::CompoundPoisson { .. } | JumpFamily::VarianceGamma { .. } => 0.0,
            JumpFamily::TrimmedStable { index, .. } => index,
        }
    }
}

/// Generative description of one experiment's data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub drift: f64,
    pub variance: f64,
    pub jump: JumpSpec,
    pub noise_sd: f64,
    pub horizon: f64,
    pub n: usize,
    #[serde(default = "default_aux")]
    pub aux_resolution: usize,
}

fn default_aux() -> usize {
    DEFAULT_AUX_RESOLUTION
}

impl ModelSpec {
    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= 0.0) || !self.variance.is_finite() {
            return Err(VolError::Config(format!("variance must be >= 0, got {}", self.variance)));
        }
        if !self.drift.is_finite() {
            return Err(VolError::Config("drift must be finite".into()));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(VolError::Config(format!("noise sd must be >= 0, got {}", self.noise_sd)));
        }
        if self.n == 0 || !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(VolError::Config("need n >= 1 and a positive horizon".into()));
        }
        if self.aux_resolution == 0 {
            return Err(VolError::Config("aux_resolution must be >= 1".into()));
        }
        self.jump.validate()
    }
}

/// Observed increments plus the latent truth behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub dy: Vec<f64>,
    pub dx: Vec<f64>,
    pub dj: Vec<f64>,
    /// Quadratic variation of the jump part over `[0, T]`.
    pub jump_qv: f64,
    /// Refinement used for `jump_qv`; `None` when it is exact.
    pub aux_resolution: Option<usize>,
    pub jump_count: usize,
    pub seed: ReplicationSeed,
    pub dt: f64,
}

impl SamplePath {
    pub fn n(&self) -> usize {
        self.dy.len()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n() as f64
    }

    /// Writes `index,t,dY,dX,dJ` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "t", "dY", "dX", "dJ"])?;
        for j in 0..self.n() {
            w.write_record(&[
                (j + 1).to_string(),
                format!("{:e}", (j + 1) as f64 * self.dt),
                format!("{:e}", self.dy[j]),
                format!("{:e}", self.dx[j]),
                format!("{:e}", self.dj[j]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads the `dY` column (and the grid spacing from `t`) of a path CSV.
pub fn read_increments_csv<R: Read>(reader: R) -> Result<(Vec<f64>, f64)> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| VolError::Io(format!("missing column {name}")))
    };
    let dy_col = col("dY")?;
    let t_col = col("t")?;
    let mut dy = Vec::new();
    let mut last_t = 0.0;
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| VolError::Io(format!("bad number: {e}")))
        };
        dy.push(parse(dy_col)?);
        last_t = parse(t_col)?;
    }
    if dy.is_empty() {
        return Err(VolError::EmptyInput);
    }
    let dt = last_t / dy.len() as f64;
    Ok((dy, dt))
}

/// Latent jump increments and their quadratic variation.
struct JumpDraw {
    increments: Vec<f64>,
    qv: f64,
    count: usize,
    aux: Option<usize>,
}

/// Simulates one replication of `spec`. Deterministic in `(spec, seed)`.
pub fn simulate_path(spec: &ModelSpec, seed: ReplicationSeed) -> Result<SamplePath> {
    spec.validate()?;
    let n = spec.n;
    let dt = spec.dt();

    let mut rng = seed.stream(StreamRole::Diffusion);
    let (mean, sd) = (spec.drift * dt, (spec.variance * dt).sqrt());
    let diffusion: Vec<f64> = (0..n)
        .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let jumps = draw_jumps(&spec.jump, n, dt, spec.aux_resolution, &mut seed.stream(StreamRole::Jumps));

    let dx: Vec<f64> = diffusion.iter().zip(&jumps.increments).map(|(a, b)| a + b).collect();
    let dy = if spec.noise_sd > 0.0 {
        let mut rng = seed.stream(StreamRole::Noise);
        let eps: Vec<f64> = (0..=n)
            .map(|_| spec.noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        dx.iter().enumerate().map(|(j, x)| x + eps[j + 1] - eps[j]).collect()
    } else {
        dx.clone()
    };

    Ok(SamplePath {
        dy,
        dx,
        dj: jumps.increments,
        jump_qv: jumps.qv,
        aux_resolution: jumps.aux,
        jump_count: jumps.count,
        seed,
        dt,
    })
}

fn draw_jumps<R: Rng>(spec: &JumpSpec, n: usize, dt: f64, aux: usize, rng: &mut R) -> JumpDraw {
    let shift = if spec.center { spec.increment_mean(dt) } else { 0.0 };
    match spec.family {
        JumpFamily::None => JumpDraw {
            increments: vec![0.0; n],
            qv: 0.0,
            count: 0,
            aux: None,
        },
        JumpFamily::CompoundPoisson {
            rate,
            lo,
            hi,
            bernoulli_approx,
        } => {
            let sizes = Uniform::new(lo, hi).expect("validated bounds");
            let intensity = rate * dt;
            let mut qv = 0.0;
            let mut count = 0;
            let mut increments = Vec::with_capacity(n);
            let bernoulli = Bernoulli::new(intensity.min(1.0)).ok();
            let poisson = if intensity > 0.0 { Poisson::new(intensity).ok() } else { None };
            for _ in 0..n {
                let k = if bernoulli_approx {
                    bernoulli.map_or(0, |b| b.sample(rng) as u64)
                } else {
                    poisson.map_or(0, |p| p.sample(rng) as u64)
                };
                let mut sum = 0.0;
                for _ in 0..k {
                    let xi = sizes.sample(rng);
                    sum += xi;
                    qv += xi * xi;
                }
                count += k as usize;
                increments.push(sum - shift);
            }
            JumpDraw {
                increments,
                qv,
                count,
                aux: None,
            }
        }
        JumpFamily::VarianceGamma { drift, diffusion, scale } => {
            let fine = vg_increments_with(drift, diffusion, scale, n * aux, dt / aux as f64, rng);
            aggregate(&fine, n, aux, shift / aux as f64)
        }
        JumpFamily::TrimmedStable { index, scale, trim } => {
            let fine = stable_increments_with(index, scale, n * aux, dt / aux as f64, rng);
            let mut draw = aggregate(&fine, n, aux, 0.0);
            let zeroed = trim_largest(&mut draw.increments, trim);
            // Jump QV counts only the fine increments that survive trimming.
            draw.qv = fine
                .chunks(aux)
                .enumerate()
                .filter(|(i, _)| !zeroed[*i])
                .map(|(_, c)| c.iter().map(|v| v * v).sum::<f64>())
                .sum();
            draw
        }
    }
}

fn aggregate(fine: &[f64], n: usize, aux: usize, shift: f64) -> JumpDraw {
    let mut qv = 0.0;
    let increments = (0..n)
        .map(|i| {
            fine[i * aux..(i + 1) * aux]
                .iter()
                .map(|v| {
                    let c = v - shift;
                    qv += c * c;
                    c
                })
                .sum()
        })
        .collect();
    JumpDraw {
        increments,
        qv,
        count: 0,
        aux: Some(aux),
    }
}

/// Zeroes the `floor(trim * len)` entries largest in absolute value, in
/// place. Returns the mask of zeroed positions.
pub fn trim_largest(values: &mut [f64], trim: f64) -> Vec<bool> {
    let k = (trim * values.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    let mut mask = vec![false; values.len()];
    for &i in order.iter().take(k) {
        values[i] = 0.0;
        mask[i] = true;
    }
    mask
}

/// Variance gamma jump increments on a grid of `n` steps of length `dt`.
pub fn simulate_vg_increments(
    drift: f64,
    diffusion: f64,
    scale: f64,
    n: usize,
    dt: f64,
    seed: ReplicationSeed,
) -> Result<Vec<f64>> {
    if !(scale > 0.0) || !(dt > 0.0) {
        return Err(VolError::Config("variance gamma needs scale > 0 and dt > 0".into()));
    }
    Ok(vg_increments_with(
        drift,
        diffusion,
        scale,
        n,
        dt,
        &mut seed.stream(StreamRole::Jumps),
    ))
}

fn vg_increments_with<R: Rng>(a: f64, b: f64, c: f64, n: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(dt / c, c).expect("positive gamma parameters");
    (0..n)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let z: f64 = rng.sample(StandardNormal);
            a * g + b * g.sqrt() * z
        })
        .collect()
}

/// Symmetric `index`-stable increments with the largest `floor(trim * n)`
/// set to zero.
pub fn simulate_stable_trimmed(
    index: f64,
    scale: f64,
    trim: f64,
    n: usize,
    dt: f64,
    seed: ReplicationSeed,
) -> Result<Vec<f64>> {
    JumpSpec {
        family: JumpFamily::TrimmedStable { index, scale, trim },
        center: false,
    }
    .validate()?;
    let mut v = stable_increments_with(index, scale, n, dt, &mut seed.stream(StreamRole::Jumps));
    trim_largest(&mut v, trim);
    Ok(v)
}

fn stable_increments_with<R: Rng>(alpha: f64, scale: f64, n: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let step_scale = scale * dt.powf(1.0 / alpha);
    let angle = Uniform::new(-FRAC_PI_2, FRAC_PI_2).expect("valid range");
    (0..n)
        .map(|_| step_scale * standard_symmetric_stable(alpha, angle.sample(rng), rng.sample(Exp1)))
        .collect()
}

/// Chambers–Mallows–Stuck draw from a standard symmetric stable law.
fn standard_symmetric_stable(alpha: f64, v: f64, w: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Sum of squared jumps, or of squared fine-grid increments.
pub fn true_jump_qv(jumps: &[f64]) -> f64 {
    jumps.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(jump: JumpSpec) -> ModelSpec {
        ModelSpec {
            drift: 0.0,
            variance: 0.0,
            jump,
            noise_sd: 0.0,
            horizon: 1.0,
            n: 4,
            aux_resolution: DEFAULT_AUX_RESOLUTION,
        }
    }

    #[test]
    fn degenerate_model_is_flat() {
        let p = simulate_path(&spec(JumpSpec::none()), ReplicationSeed::new(1, 0)).unwrap();
        assert_eq!(p.dy, vec![0.0; 4]);
        assert_eq!(p.jump_qv, 0.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec(JumpSpec::none());
        s.variance = -1.0;
        assert!(matches!(simulate_path(&s, ReplicationSeed::new(0, 0)), Err(VolError::Config(_))));
        let bad = JumpSpec {
            family: JumpFamily::CompoundPoisson {
                rate: 1.0,
                lo: 1.0,
                hi: -1.0,
                bernoulli_approx: false,
            },
            center: false,
        };
        assert!(bad.validate().is_err());
        let bad = JumpSpec {
            family: JumpFamily::TrimmedStable {
                index: 2.5,
                scale: 1.0,
                trim: 0.0,
            },
            center: false,
        };
        assert!(bad.validate().is_err());
        let bad = JumpSpec {
            family: JumpFamily::VarianceGamma {
                drift: 0.0,
                diffusion: 0.1,
                scale: 0.0,
            },
            center: false,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn compound_poisson_qv_is_sum_of_squares() {
        assert!((true_jump_qv(&[0.5, -0.3]) - 0.34).abs() < 1e-15);
        assert_eq!(true_jump_qv(&[]), 0.0);
    }

    #[test]
    fn trimming_zeroes_floor_fraction() {
        let v = simulate_stable_trimmed(0.5, 1.0, 0.02, 100, 0.01, ReplicationSeed::new(3, 0)).unwrap();
        assert_eq!(v.iter().filter(|x| **x == 0.0).count(), 2);

        let mut w = vec![1.0, -5.0, 2.0, 4.0];
        let mask = trim_largest(&mut w, 0.5);
        assert_eq!(w, vec![1.0, 0.0, 2.0, 0.0]);
        assert_eq!(mask, vec![false, true, false, true]);
    }

    #[test]
    fn vg_zero_coefficients_give_zero() {
        let v = simulate_vg_increments(0.0, 0.0, 0.23, 1000, 1e-3, ReplicationSeed::new(1, 1)).unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn noise_enters_as_first_difference() {
        let s = ModelSpec {
            drift: 0.0,
            variance: 0.2,
            jump: JumpSpec::none(),
            noise_sd: 0.1,
            horizon: 1.0,
            n: 200_000,
            aux_resolution: 1,
        };
        let p = simulate_path(&s, ReplicationSeed::new(5, 0)).unwrap();
        let d: Vec<f64> = p.dy.iter().zip(&p.dx).map(|(y, x)| y - x).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let cov: f64 = d.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let rho = cov / var;
        assert!((rho + 0.5).abs() < 0.01, "lag-1 autocorrelation {rho}");
    }

    #[test]
    fn csv_roundtrip_of_observed_increments() {
        let s = ModelSpec {
            drift: 0.1,
            variance: 0.3,
            jump: JumpSpec::none(),
            noise_sd: 0.01,
            horizon: 2.0,
            n: 50,
            aux_resolution: 1,
        };
        let p = simulate_path(&s, ReplicationSeed::new(9, 2)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,t,dY,dX,dJ\n"));
        let (dy, dt) = read_increments_csv(buf.as_slice()).unwrap();
        assert_eq!(dy, p.dy);
        assert!((dt - 0.04).abs() < 1e-12);
    }
}
