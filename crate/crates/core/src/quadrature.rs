//! One-dimensional quadrature: adaptive Simpson and adaptive Gauss–Legendre.
//!
//! The two rules share no code so each can serve as an oracle for the other.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Adaptive Simpson with Richardson correction, absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_rule(order: usize) -> Rule {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Rule { nodes, weights }
}

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (legendre_rule(10), legendre_rule(20)))
}

fn apply(rule: &Rule, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// Adaptive Gauss–Legendre: accept a panel when the 10- and 20-point rules agree.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (lo, hi) = rules();
    gl_rec(f, lo, hi, a, b, tol, 40)
}

fn gl_rec<F: Fn(f64) -> f64>(f: &F, lo: &Rule, hi: &Rule, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let coarse = apply(lo, f, a, b);
    let fine = apply(hi, f, a, b);
    if depth == 0 || (coarse - fine).abs() <= tol {
        return fine;
    }
    let m = 0.5 * (a + b);
    gl_rec(f, lo, hi, a, m, 0.5 * tol, depth - 1) + gl_rec(f, lo, hi, m, b, 0.5 * tol, depth - 1)
}

/// Integrates over `[a, b]` splitting at the interior `breaks`, which should
/// include every kink or discontinuity of `f`.
pub fn with_breaks<F, Q>(rule: Q, f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    Q: Fn(&F, f64, f64, f64) -> f64,
{
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|x| *x > a && *x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let k = (pts.len() - 1).max(1) as f64;
    pts.windows(2).map(|w| rule(f, w[0], w[1], tol / k)).sum()
}
