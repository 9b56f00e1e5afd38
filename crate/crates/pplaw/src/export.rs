//! Tidy CSV and JSON views of library results, for plotting and scripting.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use pplaw_core::fit::{BandPoint, Residual};
use pplaw_core::stats::HistogramBin;
use pplaw_core::synth::TrainingCurve;
use pplaw_core::{LandscapeGrid, Observation, PathPoint, PplStats, WeightingMode};
use serde::{Deserialize, Serialize};

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

/// Serialized form of [`PplStats`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub count: u64,
    /// Total tokens.
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
    pub std: f64,
    pub mode: WeightingMode,
}

impl StatsRecord {
    pub fn new(s: &PplStats) -> Result<Self> {
        Ok(Self {
            count: s.count(),
            weight: s.weight(),
            mean: s.mean()?,
            variance: s.variance()?,
            std: s.std()?,
            mode: s.mode(),
        })
    }
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["lo", "hi", "count"])?;
    for b in bins {
        w.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `mu,sigma,loss`, mu-major.
pub fn write_grid_csv(path: &Path, grid: &LandscapeGrid) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["mu", "sigma", "loss"])?;
    for (i, mu) in grid.mu_axis.iter().enumerate() {
        for (j, sigma) in grid.sigma_axis.iter().enumerate() {
            w.write_record([
                mu.to_string(),
                sigma.to_string(),
                grid.loss[i][j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `path_id,step,mu,sigma,loss`.
pub fn write_paths_csv(path: &Path, paths: &[Vec<PathPoint>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["path_id", "step", "mu", "sigma", "loss"])?;
    for (id, p) in paths.iter().enumerate() {
        for (step, pt) in p.iter().enumerate() {
            w.write_record([
                id.to_string(),
                step.to_string(),
                pt.mu.to_string(),
                pt.sigma.to_string(),
                pt.loss.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per observation, tagged with the split it belongs to.
pub fn write_residuals_csv(path: &Path, rows: &[(&str, &Observation, Residual)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "split",
        "tag",
        "mu",
        "sigma",
        "d_tokens",
        "test_loss",
        "predicted",
        "residual",
    ])?;
    for (split, o, r) in rows {
        w.write_record([
            split.to_string(),
            o.tag.clone().unwrap_or_default(),
            o.mu.to_string(),
            o.sigma.to_string(),
            o.d_tokens.to_string(),
            o.test_loss.to_string(),
            r.predicted.to_string(),
            r.residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_band_csv(path: &Path, band: &[BandPoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sigma", "loss_lo", "loss_center", "loss_hi"])?;
    for b in band {
        w.write_record([
            b.sigma.to_string(),
            b.loss_lo.to_string(),
            b.loss_center.to_string(),
            b.loss_hi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `method,mu,sigma,d_tokens,loss`.
pub fn write_curves_csv(path: &Path, curves: &[TrainingCurve]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["method", "mu", "sigma", "d_tokens", "loss"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.method.as_str().to_string(),
                c.mu.to_string(),
                c.sigma.to_string(),
                p.d_tokens.to_string(),
                p.loss.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
