//! Peak-clustering period detection and the combined regime classifier.

use serde::{Deserialize, Serialize};

use super::embedding::{delay_embed, EmbeddingConfig};
use super::lyapunov::{estimate_lyapunov_with, LyapunovConfig};
use super::{AnalysisError, Regime, RegimeLabel};

/// Result of peak clustering alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodOutcome {
    /// `k` tight clusters of maxima, `k <= k_max`.
    Period(u32),
    /// Constant within tolerance over the window.
    Constant,
    /// More than `k_max` clusters, or maxima spread over a continuum.
    Overflow { clusters: usize },
    /// Not constant but without interior maxima (monotone window).
    NoMaxima,
}

/// Interior local maxima of `x` with parabolic refinement of the peak value.
/// Plateaus count once, at their first sample.
pub fn find_maxima(x: &[f64]) -> Vec<f64> {
    let mut peaks = Vec::new();
    if x.len() < 3 {
        return peaks;
    }
    let mut i = 1;
    while i + 1 < x.len() {
        if x[i - 1] < x[i] && x[i] >= x[i + 1] {
            let mut j = i;
            while j + 1 < x.len() && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 == x.len() {
                break;
            }
            if x[j + 1] < x[i] {
                let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
                let curv = a - 2.0 * b + c;
                let v = if j == i && curv < 0.0 {
                    b - (c - a) * (c - a) / (8.0 * curv)
                } else {
                    b
                };
                peaks.push(v);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

fn tail(series: &[f64], dt: f64, window: f64) -> &[f64] {
    let n = ((window / dt).round() as usize).saturating_add(1);
    &series[series.len().saturating_sub(n)..]
}

/// Classifies the tail `steady_window` seconds of a uniformly sampled series
/// (spacing `dt`) by clustering its local maxima.
///
/// Clusters are built by single linkage with gap `rel_tol * (max - min)` of
/// the window. A cluster whose own spread exceeds that gap is a chain through
/// a continuum of peak values and is reported as overflow.
pub fn detect_period(series: &[f64], dt: f64, steady_window: f64, rel_tol: f64, k_max: u32) -> PeriodOutcome {
    let w = tail(series, dt, steady_window);
    if w.is_empty() {
        return PeriodOutcome::NoMaxima;
    }
    let (lo, hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let scale = lo.abs().max(hi.abs());
    if range <= rel_tol * scale {
        return PeriodOutcome::Constant;
    }
    let mut peaks = find_maxima(w);
    if peaks.is_empty() {
        return PeriodOutcome::NoMaxima;
    }
    peaks.sort_by(f64::total_cmp);
    let gap = rel_tol * range;
    let mut clusters = 1usize;
    let mut chained = false;
    let mut first = peaks[0];
    for pair in peaks.windows(2) {
        if pair[1] - pair[0] > gap {
            if pair[0] - first > gap {
                chained = true;
            }
            clusters += 1;
            first = pair[1];
        }
    }
    if peaks[peaks.len() - 1] - first > gap {
        chained = true;
    }
    if chained || clusters > k_max as usize {
        PeriodOutcome::Overflow { clusters }
    } else {
        PeriodOutcome::Period(clusters as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Tail window in seconds.
    pub steady_window: f64,
    pub rel_tol: f64,
    pub k_max: u32,
    /// Delay embedding used for the Lyapunov test. `resample_dt` must be an
    /// integer multiple of the series spacing.
    pub embedding: EmbeddingConfig,
    /// Lyapunov settings in embedding samples.
    pub lyapunov: LyapunovConfig,
    /// Minimum `lambda * fit duration` required to call a positive estimate
    /// divergence rather than noise.
    pub min_log_growth: f64,
}

/// Full classifier: peak clustering, then the Lyapunov test when clustering
/// overflows. Chaos needs both overflow and a positive exponent.
pub fn classify(series: &[f64], dt: f64, cfg: &ClassifyConfig) -> Result<RegimeLabel, AnalysisError> {
    if !(dt > 0.0) {
        return Err(AnalysisError::Config(format!("sample spacing must be > 0, got {dt:e}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::Config("series contains non-finite values".into()));
    }
    match detect_period(series, dt, cfg.steady_window, cfg.rel_tol, cfg.k_max) {
        PeriodOutcome::Period(k) => Ok(RegimeLabel::new(Regime::Period(k))),
        PeriodOutcome::Constant => Ok(RegimeLabel::new(Regime::Period(1))),
        PeriodOutcome::NoMaxima => Ok(RegimeLabel::new(Regime::Undetermined)),
        PeriodOutcome::Overflow { .. } => {
            let ratio = cfg.embedding.resample_dt / dt;
            let stride = ratio.round();
            if stride < 1.0 || (ratio - stride).abs() > 1e-6 * stride {
                return Err(AnalysisError::Config(format!(
                    "embedding resample_dt = {:e} s is not a multiple of the series spacing {dt:e} s",
                    cfg.embedding.resample_dt
                )));
            }
            let w = tail(series, dt, cfg.steady_window);
            let sub: Vec<f64> = w.iter().step_by(stride as usize).copied().collect();
            let emb = delay_embed(&sub, &cfg.embedding)?;
            let lambda = estimate_lyapunov_with(&emb, cfg.embedding.resample_dt, &cfg.lyapunov)?;
            let fit_time = (cfg.lyapunov.fit_end - cfg.lyapunov.fit_start) as f64 * cfg.embedding.resample_dt;
            let regime = if lambda > 0.0 && lambda * fit_time >= cfg.min_log_growth {
                Regime::Chaotic
            } else {
                Regime::Undetermined
            };
            Ok(RegimeLabel::new(regime).with_lyapunov(lambda))
        }
    }
}
