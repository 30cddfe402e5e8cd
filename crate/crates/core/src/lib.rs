//! Synchronization of two dissipative quantum oscillators driven by a common
//! classical optomechanical controller.
//!
//! The controller's mean-field amplitudes are integrated first; the squared
//! amplitudes of its two output cavities then shift the frequencies of the
//! oscillators, whose second moments are integrated under that drive.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod controller;
pub mod integrator;
pub mod io;
pub mod moments;
pub mod sweep;

use thiserror::Error;

pub use io::config::{parse_config, ConfigError, ParsedConfig};
pub use sweep::{run_scenario, ScenarioConfig, SweepError, SweepSpec};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Io(#[from] io::IoError),
}

impl Error {
    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Sweep(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}
