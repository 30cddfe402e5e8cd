//! Time-delay embedding of scalar series.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Delay in seconds.
    pub tau: f64,
    pub dim: usize,
    /// Spacing of the uniform grid the series is sampled on, in seconds.
    pub resample_dt: f64,
}

impl EmbeddingConfig {
    /// Delay of 0.3 ns in three dimensions, sampled ten times per delay.
    pub fn standard() -> Self {
        EmbeddingConfig {
            tau: 0.3e-9,
            dim: 3,
            resample_dt: 0.3e-10,
        }
    }

    /// Delay expressed in grid samples. The delay must be an integer multiple
    /// of the grid spacing.
    pub fn lag(&self) -> Result<usize, AnalysisError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(AnalysisError::Config(format!("tau must be > 0, got {:e}", self.tau)));
        }
        if !(self.resample_dt > 0.0 && self.resample_dt.is_finite()) {
            return Err(AnalysisError::Config(format!(
                "resample_dt must be > 0, got {:e}",
                self.resample_dt
            )));
        }
        if self.dim < 2 {
            return Err(AnalysisError::Config(format!(
                "embedding dimension must be >= 2, got {}",
                self.dim
            )));
        }
        let ratio = self.tau / self.resample_dt;
        let lag = ratio.round();
        if lag < 1.0 || (ratio - lag).abs() > 1e-6 * lag {
            return Err(AnalysisError::Config(format!(
                "tau = {:e} s is not an integer multiple of resample_dt = {:e} s",
                self.tau, self.resample_dt
            )));
        }
        Ok(lag as usize)
    }
}

/// Delay-embedded points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub dim: usize,
    pub lag: usize,
    data: Vec<f64>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Builds an embedding directly from row-major points.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        Embedding { dim, lag: 0, data }
    }
}

/// Points `(x(t_k), x(t_k + tau), ..., x(t_k + (dim-1) tau))` for every `k`
/// where the last coordinate is still inside the series.
pub fn delay_embed(series: &[f64], cfg: &EmbeddingConfig) -> Result<Embedding, AnalysisError> {
    let lag = cfg.lag()?;
    let span = (cfg.dim - 1) * lag;
    if series.len() <= span {
        return Err(AnalysisError::Length(format!(
            "series of {} samples is too short for dim = {} and lag = {lag}",
            series.len(),
            cfg.dim
        )));
    }
    let count = series.len() - span;
    let mut data = Vec::with_capacity(count * cfg.dim);
    for k in 0..count {
        for d in 0..cfg.dim {
            data.push(series[k + d * lag]);
        }
    }
    Ok(Embedding {
        dim: cfg.dim,
        lag,
        data,
    })
}

/// Samples `f` on `t_start, t_start + dt, ...` up to and including `t_end`
/// (within a relative slack of 1e-9 steps).
pub fn resample_uniform<F, E>(t_start: f64, t_end: f64, dt: f64, mut f: F) -> Result<(Vec<f64>, Vec<f64>), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let steps = ((t_end - t_start) / dt + 1e-9).floor().max(0.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = (t_start + k as f64 * dt).min(t_end);
        times.push(t);
        values.push(f(t)?);
    }
    Ok((times, values))
}
