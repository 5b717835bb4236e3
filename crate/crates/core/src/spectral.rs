//! Decorrelating sine transform of noisy increments.
//!
//! Under a Gaussian random walk observed with i.i.d. noise, the increments
//! form an MA(1)-type vector whose covariance is diagonalised by the
//! symmetric orthogonal matrix `P_n` with entries
//! `p_ij = sqrt(2/(n+1)) sin(i j pi / (n+1))`. `R = P_n dY` then has
//! independent coordinates with variances `theta dt + 2 s2 (1 - cos(j pi/(n+1)))`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VolError};

/// Sizes above this use the FFT-based transform by default.
pub const FAST_PATH_THRESHOLD: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedData {
    pub r: Vec<f64>,
    pub n: usize,
    pub dt: f64,
    /// Noise-variance plug-in attached downstream; zero when absent.
    pub noise_var: f64,
}

/// `sin(m pi / (n+1))` with `m` reduced modulo `2(n+1)` in integer arithmetic.
#[inline]
fn sin_grid(m: u128, n: usize) -> f64 {
    let period = 2 * (n as u128 + 1);
    let r = (m % period) as f64;
    (r * PI / (n as f64 + 1.0)).sin()
}

/// Entry `(i, j)` of `P_n`, 1-based.
pub fn p_entry(n: usize, i: usize, j: usize) -> Result<f64> {
    for idx in [i, j] {
        if idx == 0 || idx > n {
            return Err(VolError::IndexOutOfRange { index: idx, n });
        }
    }
    Ok((2.0 / (n as f64 + 1.0)).sqrt() * sin_grid(i as u128 * j as u128, n))
}

/// `R = P_n dY`, choosing the fast path for large inputs.
pub fn apply_transform(dy: &[f64], dt: f64) -> Result<TransformedData> {
    let r = if dy.len() > FAST_PATH_THRESHOLD {
        transform_fast(dy)?
    } else {
        transform_direct(dy)?
    };
    Ok(TransformedData {
        n: r.len(),
        r,
        dt,
        noise_var: 0.0,
    })
}

/// Dense `O(n^2)` matrix-vector product.
pub fn transform_direct(dy: &[f64]) -> Result<Vec<f64>> {
    let n = dy.len();
    if n == 0 {
        return Err(VolError::EmptyInput);
    }
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    // sin table indexed by (i*j) mod 2(n+1)
    let period = 2 * (n + 1);
    let table: Vec<f64> = (0..period)
        .map(|m| (m as f64 * PI / (n as f64 + 1.0)).sin())
        .collect();
    Ok((1..=n)
        .map(|i| {
            let mut acc = 0.0;
            let mut m = 0usize;
            for &y in dy {
                m += i;
                if m >= period {
                    m -= period;
                }
                acc += table[m] * y;
            }
            norm * acc
        })
        .collect())
}

/// Type-I discrete sine transform through a complex FFT of length `2(n+1)`.
pub fn transform_fast(dy: &[f64]) -> Result<Vec<f64>> {
    let n = dy.len();
    if n == 0 {
        return Err(VolError::EmptyInput);
    }
    let len = 2 * (n + 1);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (j, &y) in dy.iter().enumerate() {
        buf[j + 1].re = y;
        buf[len - 1 - j].re = -y;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    // FFT of the odd extension is -2i * sum_j y_j sin(pi j k / (n+1)).
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    Ok((1..=n).map(|k| -0.5 * buf[k].im * norm).collect())
}

/// `1 - cos(j pi / (n+1))`, evaluated as `2 sin^2` to avoid cancellation.
#[inline]
pub fn one_minus_cos(n: usize, j: usize) -> f64 {
    let h = 0.5 * j as f64 * PI / (n as f64 + 1.0);
    let s = h.sin();
    2.0 * s * s
}

/// Variance of `R_j` under the Gaussian-plus-noise model.
pub fn eigen_variance(theta: f64, noise_var: f64, n: usize, dt: f64, j: usize) -> Result<f64> {
    if j == 0 || j > n {
        return Err(VolError::IndexOutOfRange { index: j, n });
    }
    Ok(theta * dt + 2.0 * noise_var * one_minus_cos(n, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_oracle(dy: &[f64]) -> Vec<f64> {
        let n = dy.len();
        (1..=n)
            .map(|i| (1..=n).map(|j| p_entry(n, i, j).unwrap() * dy[j - 1]).sum())
            .collect()
    }

    #[test]
    fn one_by_one_is_identity() {
        assert!((p_entry(1, 1, 1).unwrap() - 1.0).abs() < 1e-15);
        let t = apply_transform(&[0.37], 1.0).unwrap();
        assert!((t.r[0] - 0.37).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_index() {
        assert_eq!(p_entry(3, 0, 1), Err(VolError::IndexOutOfRange { index: 0, n: 3 }));
        assert!(p_entry(3, 1, 4).is_err());
        assert!(eigen_variance(1.0, 0.1, 3, 0.1, 4).is_err());
        assert_eq!(apply_transform(&[], 1.0), Err(VolError::EmptyInput));
    }

    #[test]
    fn unit_vector_maps_to_column() {
        let mut e = vec![0.0; 8];
        e[0] = 1.0;
        let r = transform_direct(&e).unwrap();
        let f = transform_fast(&e).unwrap();
        let oracle = direct_oracle(&e);
        for i in 0..8 {
            assert!((r[i] - oracle[i]).abs() < 1e-14);
            assert!((f[i] - oracle[i]).abs() < 1e-14);
            assert!((oracle[i] - p_entry(8, i + 1, 1).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_entries() {
        let n = 257;
        for (i, j) in [(3, 200), (17, 5), (256, 257), (129, 128)] {
            assert_eq!(p_entry(n, i, j).unwrap(), p_entry(n, j, i).unwrap());
        }
    }

    #[test]
    fn fourth_power_identity() {
        let n = 100;
        let s: f64 = (1..=n).map(|j| p_entry(n, 7, j).unwrap().powi(4)).sum();
        assert!((s - 3.0 / (2.0 * (n as f64 + 1.0))).abs() < 1e-12);
    }

    #[test]
    fn fast_matches_direct_across_sizes() {
        for n in [1usize, 2, 3, 255, 256, 4096] {
            let dy: Vec<f64> = (0..n).map(|k| ((k * 7919 % 101) as f64 - 50.0) / 17.0).collect();
            let a = transform_direct(&dy).unwrap();
            let b = transform_fast(&dy).unwrap();
            let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() / scale < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn eigen_variance_limits() {
        let dt = 1e-4;
        for j in 1..=10 {
            assert_eq!(eigen_variance(0.3, 0.0, 10, dt, j).unwrap(), 0.3 * dt);
        }
        let n = 10_000;
        let lam = eigen_variance(0.3, 1e-4, n, 1.0 / n as f64, n).unwrap();
        assert!((lam - (4e-4 + 3e-5)).abs() < 1e-7);
        let v: Vec<f64> = (1..=100).map(|j| eigen_variance(1.0, 0.01, 100, 0.01, j).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    proptest! {
        #[test]
        fn transform_preserves_norm(v in proptest::collection::vec(-10.0f64..10.0, 1..700)) {
            let t = apply_transform(&v, 1.0).unwrap();
            let a: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let b: f64 = t.r.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }

        #[test]
        fn transform_is_an_involution(v in proptest::collection::vec(-1.0f64..1.0, 1..300)) {
            let once = transform_direct(&v).unwrap();
            let twice = transform_direct(&once).unwrap();
            for (x, y) in v.iter().zip(&twice) {
                prop_assert!((x - y).abs() < 1e-11);
            }
        }
    }
}
