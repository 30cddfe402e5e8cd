//! Largest Lyapunov exponent from nearest-neighbour divergence in an embedding.

use serde::{Deserialize, Serialize};

use super::embedding::Embedding;
use super::AnalysisError;

pub const MIN_POINTS: usize = 1000;

/// All lengths are in embedding samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    /// Neighbours closer than this in time are excluded.
    pub theiler: usize,
    /// Number of steps the separation is followed.
    pub horizon: usize,
    /// Least-squares fit of mean log separation over `fit_start..=fit_end`.
    pub fit_start: usize,
    pub fit_end: usize,
    /// Reference points used, spread evenly over the embedding.
    pub max_refs: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            theiler: 10,
            horizon: 50,
            fit_start: 0,
            fit_end: 20,
            max_refs: 2000,
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.fit_end <= self.fit_start {
            return Err(AnalysisError::Config("fit_end must exceed fit_start".into()));
        }
        if self.fit_end >= self.horizon {
            return Err(AnalysisError::Config("fit_end must be below horizon".into()));
        }
        if self.max_refs == 0 {
            return Err(AnalysisError::Config("max_refs must be >= 1".into()));
        }
        Ok(())
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean log separation `<ln d_j(k)>` for `k = 0..horizon`.
pub fn divergence_curve(emb: &Embedding, cfg: &LyapunovConfig) -> Result<Vec<f64>, AnalysisError> {
    cfg.validate()?;
    let n = emb.len();
    if n < MIN_POINTS {
        return Err(AnalysisError::Length(format!(
            "Lyapunov estimate needs at least {MIN_POINTS} embedded points, got {n}"
        )));
    }
    if n <= cfg.horizon + 2 * cfg.theiler + 1 {
        return Err(AnalysisError::Length(format!(
            "{n} embedded points do not cover horizon {} with Theiler window {}",
            cfg.horizon, cfg.theiler
        )));
    }
    let usable = n - cfg.horizon;
    let refs = cfg.max_refs.min(usable);
    let mut sum = vec![0.0; cfg.horizon];
    let mut count = vec![0usize; cfg.horizon];
    for r in 0..refs {
        let i = r * usable / refs;
        let pi = emb.point(i);
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for j in 0..usable {
            if i.abs_diff(j) <= cfg.theiler {
                continue;
            }
            let d = dist2(pi, emb.point(j));
            if d > 0.0 && d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        let Some(j) = best else { continue };
        for k in 0..cfg.horizon {
            let d = dist2(emb.point(i + k), emb.point(j + k));
            if d > 0.0 {
                sum[k] += 0.5 * d.ln();
                count[k] += 1;
            }
        }
    }
    if count[cfg.fit_start..=cfg.fit_end].contains(&0) {
        return Err(AnalysisError::Length("no valid neighbour pairs in the fit window".into()));
    }
    Ok(sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect())
}

/// Estimate with default settings. Returns 1/s when `resample_dt` is in seconds.
pub fn estimate_lyapunov(emb: &Embedding, resample_dt: f64) -> Result<f64, AnalysisError> {
    estimate_lyapunov_with(emb, resample_dt, &LyapunovConfig::default())
}

/// Slope of the divergence curve over the fit window, divided by `resample_dt`.
pub fn estimate_lyapunov_with(emb: &Embedding, resample_dt: f64, cfg: &LyapunovConfig) -> Result<f64, AnalysisError> {
    if !(resample_dt > 0.0) {
        return Err(AnalysisError::Config(format!("resample_dt must be > 0, got {resample_dt:e}")));
    }
    let curve = divergence_curve(emb, cfg)?;
    let ks: Vec<f64> = (cfg.fit_start..=cfg.fit_end).map(|k| k as f64).collect();
    let ys = &curve[cfg.fit_start..=cfg.fit_end];
    let m = ks.len() as f64;
    let kbar = ks.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in ks.iter().zip(ys) {
        sxy += (k - kbar) * (y - ybar);
        sxx += (k - kbar) * (k - kbar);
    }
    Ok(sxy / sxx / resample_dt)
}
