//! Synchronization metrics, delay embedding and regime classification.

pub mod embedding;
pub mod lyapunov;
pub mod regime;
pub mod sync;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::SigmaPair;

pub use embedding::{delay_embed, resample_uniform, Embedding, EmbeddingConfig};
pub use lyapunov::{estimate_lyapunov, estimate_lyapunov_with, LyapunovConfig};
pub use regime::{classify, detect_period, find_maxima, ClassifyConfig, PeriodOutcome};
pub use sync::{
    analytic_error_b2, analytic_error_nb, avg_sync_error, error_signals, sync_time, trapezoid_from,
    ErrorSeries, Integrand, OscillatorSeries,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("series are not aligned: {0}")]
    Alignment(String),
    #[error("non-finite value at t = {0:e} s")]
    NonFinite(f64),
    #[error("range error: {0}")]
    Range(String),
    #[error("length error: {0}")]
    Length(String),
    #[error("invalid analysis configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Regime {
    Period(u32),
    Chaotic,
    Undetermined,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Period(k) => write!(f, "period-{k}"),
            Regime::Chaotic => f.write_str("chaotic"),
            Regime::Undetermined => f.write_str("undetermined"),
        }
    }
}

impl FromStr for Regime {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chaotic" => Ok(Regime::Chaotic),
            "undetermined" => Ok(Regime::Undetermined),
            _ => s
                .strip_prefix("period-")
                .and_then(|k| k.parse::<u32>().ok())
                .filter(|&k| k >= 1)
                .map(Regime::Period)
                .ok_or_else(|| AnalysisError::Config(format!("unknown regime label '{s}'"))),
        }
    }
}

impl From<Regime> for String {
    fn from(r: Regime) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for Regime {
    type Error = AnalysisError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub regime: Regime,
    /// Largest Lyapunov exponent in 1/s, when it was estimated.
    pub lyapunov_estimate: Option<f64>,
}

impl RegimeLabel {
    pub fn new(regime: Regime) -> Self {
        if let Regime::Period(k) = regime {
            assert!(k >= 1, "period must be >= 1");
        }
        RegimeLabel {
            regime,
            lyapunov_estimate: None,
        }
    }

    pub fn with_lyapunov(mut self, lambda: f64) -> Self {
        self.lyapunov_estimate = Some(lambda);
        self
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.regime.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub e_avg: f64,
    pub t_sync: Option<f64>,
    pub regime: RegimeLabel,
    pub final_sigmas: [SigmaPair; 2],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_strings_round_trip() {
        for r in [Regime::Period(1), Regime::Period(4), Regime::Chaotic, Regime::Undetermined] {
            assert_eq!(r.to_string().parse::<Regime>().unwrap(), r);
        }
        assert!("period-0".parse::<Regime>().is_err());
        assert!("periodic".parse::<Regime>().is_err());
        assert_eq!(serde_json::to_string(&Regime::Period(6)).unwrap(), "\"period-6\"");
    }
}
