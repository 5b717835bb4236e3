//! CSV and JSON writers for experiment results.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::posterior::{adjust, Law, TemperedPosterior};
use crate::stats;

use super::pipeline::{PlotRecord, ReplicationRow};
use super::ExperimentResult;

/// Row of `intervals.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub rep: usize,
    pub kind: String,
    pub lower: f64,
    pub upper: f64,
    pub covers_truth: bool,
}

/// Row of `densities.csv`; `full_bayes` is empty unless a Gibbs sample exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub rep: usize,
    pub x: f64,
    pub posterior: f64,
    pub adjusted: f64,
    pub reference: f64,
    pub full_bayes: Option<f64>,
}

pub fn write_rows_csv<W: Write>(rows: &[ReplicationRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Every interval of every successful row.
pub fn interval_table(rows: &[ReplicationRow]) -> Vec<IntervalRow> {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let kinds = [
            ("hpd", r.hpd_lower, r.hpd_upper),
            ("equal_tail", r.equal_tail_lower, r.equal_tail_upper),
            ("wald_normal", r.wald_lower, r.wald_upper),
            ("clt", r.clt_lower, r.clt_upper),
            ("full_bayes_hpd", r.gibbs_hpd_lower, r.gibbs_hpd_upper),
        ];
        for (kind, lo, hi) in kinds {
            if let (Some(lower), Some(upper)) = (lo, hi) {
                out.push(IntervalRow {
                    rep: r.rep,
                    kind: kind.into(),
                    lower,
                    upper,
                    covers_truth: lower <= r.truth && r.truth <= upper,
                });
            }
        }
    }
    out
}

/// Gaussian kernel density of `samples` at `x`.
fn kde(sorted: &[f64], h: f64, x: f64) -> f64 {
    let lo = sorted.partition_point(|v| *v < x - 8.0 * h);
    let hi = sorted.partition_point(|v| *v <= x + 8.0 * h);
    let norm = (2.0 * std::f64::consts::PI).sqrt() * h * sorted.len() as f64;
    sorted[lo..hi].iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>() / norm
}

enum Density {
    Analytic(crate::posterior::ShiftedInverseGamma),
    Kernel(Vec<f64>, f64),
}

impl Density {
    fn of(p: &TemperedPosterior) -> Self {
        match (p.analytic_law(), p.samples()) {
            (Some(law), _) => Density::Analytic(law),
            (None, Some(s)) => Density::kernel(s),
            (None, None) => unreachable!("posterior has a representation"),
        }
    }

    fn kernel(s: &[f64]) -> Self {
        let sorted = stats::sorted(s);
        let h = stats::silverman_bandwidth(&sorted);
        Density::Kernel(sorted, h)
    }

    fn at(&self, x: f64) -> f64 {
        match self {
            Density::Analytic(law) => law.pdf(x),
            Density::Kernel(s, h) => kde(s, *h, x),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            Density::Analytic(law) => (law.quantile(1e-7), law.quantile(1.0 - 1e-7)),
            Density::Kernel(s, h) => (s[0] - 6.0 * h, s[s.len() - 1] + 6.0 * h),
        }
    }
}

/// Points per density curve.
pub const DENSITY_GRID: usize = 1601;

/// Grid-evaluated posterior, adjusted posterior, normal reference and, when
/// present, the full-Bayes marginal for each kept replication.
pub fn emit_plot_data(plots: &[PlotRecord]) -> Vec<DensityRow> {
    let mut out = Vec::new();
    for p in plots {
        let post = Density::of(&p.posterior);
        let adj = Density::of(&adjust(&p.posterior, p.shift));
        let fb = p.full_bayes.as_deref().map(Density::kernel);
        let r = &p.reference;
        let mut lo = r.quantile(1e-7);
        let mut hi = r.quantile(1.0 - 1e-7);
        for d in [Some(&post), Some(&adj), fb.as_ref()].into_iter().flatten() {
            let (a, b) = d.range();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let step = (hi - lo) / (DENSITY_GRID - 1) as f64;
        for i in 0..DENSITY_GRID {
            let x = lo + i as f64 * step;
            out.push(DensityRow {
                rep: p.rep,
                x,
                posterior: post.at(x),
                adjusted: adj.at(x),
                reference: r.pdf(x),
                full_bayes: fb.as_ref().map(|d| d.at(x)),
            });
        }
    }
    out
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rows.csv`, `intervals.csv` and `summary.json` into `dir`, plus
/// `densities.csv` when plot data was kept.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rows_csv(&result.rows, fs::File::create(dir.join("rows.csv"))?)?;
    write_csv(&dir.join("intervals.csv"), &interval_table(&result.rows))?;
    if !result.plots.is_empty() {
        write_csv(&dir.join("densities.csv"), &emit_plot_data(&result.plots))?;
    }
    let json = serde_json::to_string_pretty(&result.summary)?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}
