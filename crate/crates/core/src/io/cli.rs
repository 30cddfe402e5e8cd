//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::config::{parse_config, ParsedConfig};
use super::csv::{write_embedding_csv, write_grid_csv, write_regimes_csv, write_timeseries_csv};
use super::manifest::RunManifest;
use super::IoError;
use crate::analysis::EmbeddingConfig;
use crate::integrator::IntegratorSettings;
use crate::sweep::{
    portrait, run_scenario, sweep_detuning, sweep_mismatch, Observable, ScenarioConfig, SweepAxes, SweepError,
};
use crate::Error;

pub const WORKERS_ENV: &str = "APD_SYNC_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "apdsync", version, about = "Simulate and analyse driven oscillator synchronization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObservableArg {
    Sigma,
    Excess,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its time series.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the run length in seconds.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Use RK4 with this step in seconds.
        #[arg(long = "fixed-dt")]
        fixed_dt: Option<f64>,
    },
    /// Run a detuning scan or mismatch grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; falls back to APD_SYNC_WORKERS, then to the CPU count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the dynamical regime of oscillator 1.
    Classify {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the run manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the delay-embedded portrait of oscillator 1.
    Embed {
        #[arg(long)]
        config: PathBuf,
        /// Delay in seconds.
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "sigma")]
        observable: ObservableArg,
    },
}

fn load(path: &Path) -> Result<ParsedConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    Ok(parse_config(&text)?)
}

fn scenario_only(cfg: &ParsedConfig) -> Result<&ScenarioConfig, Error> {
    match cfg {
        ParsedConfig::Scenario(s) => Ok(s),
        ParsedConfig::Sweep(_) => Err(SweepError::Config("configuration describes a sweep; use `sweep`".into()).into()),
    }
}

fn workers(flag: Option<usize>) -> Result<usize, Error> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(SweepError::Config("--workers must be >= 1".into()).into())
        } else {
            Ok(n)
        };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| SweepError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")).into()),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn simulate(
    config: &Path,
    out: &Path,
    t_end: Option<f64>,
    fixed_dt: Option<f64>,
    stdout: &mut dyn Write,
) -> Result<(), Error> {
    let mut parsed = load(config)?;
    scenario_only(&parsed)?;
    {
        let run = &mut parsed.base_mut().run;
        if let Some(t) = t_end {
            run.t_end = t;
        }
        if let Some(dt) = fixed_dt {
            let record_every = match run.integrator {
                IntegratorSettings::Fixed { record_every, .. } | IntegratorSettings::Adaptive { record_every, .. } => {
                    record_every
                }
            };
            run.integrator = IntegratorSettings::Fixed { dt, record_every };
        }
    }
    let cfg = scenario_only(&parsed)?;
    cfg.validate()?;
    let res = run_scenario(cfg)?;
    let ts = out.join("timeseries.csv");
    write_timeseries_csv(&ts, &res.controller, &res.moments, cfg.run.output_every)?;
    let report = out.join("report.json");
    let text = serde_json::to_string_pretty(&res.report).expect("report serializes") + "\n";
    std::fs::write(&report, text).map_err(|e| IoError::at(&report, e))?;
    RunManifest::new("simulate", &parsed, vec![file_name(&ts), file_name(&report)], json!({}))
        .write(&out.join("manifest.json"))?;
    let r = &res.report;
    let _ = writeln!(stdout, "e_avg {:e}", r.e_avg);
    let _ = match r.t_sync {
        Some(t) => writeln!(stdout, "t_sync_s {t:e}"),
        None => writeln!(stdout, "t_sync_s none"),
    };
    let _ = writeln!(stdout, "regime {}", r.regime);
    Ok(())
}

fn sweep(config: &Path, out: &Path, flag: Option<usize>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Error> {
    let parsed = load(config)?;
    let ParsedConfig::Sweep(spec) = &parsed else {
        return Err(SweepError::Config("configuration has no `sweep` section".into()).into());
    };
    let n = workers(flag)?;
    let (grid, outputs, extra) = match &spec.axes {
        SweepAxes::Detuning { .. } => {
            let res = sweep_detuning(spec, n)?;
            let path = out.join("regimes.csv");
            write_regimes_csv(&path, &res.grid)?;
            let mut outputs = vec![file_name(&path)];
            for (i, p) in res.portraits.iter().enumerate() {
                if let Some(p) = p {
                    let name = format!("portrait_{i:03}.csv");
                    write_embedding_csv(&out.join(&name), p)?;
                    outputs.push(name);
                }
            }
            (res.grid, outputs, json!({}))
        }
        SweepAxes::Mismatch { .. } => {
            let grid = sweep_mismatch(spec, n)?;
            let path = out.join("grid.csv");
            write_grid_csv(&path, &grid)?;
            let extra = json!({ "drive_sha256": grid.provenance.drive_hash });
            (grid, vec![file_name(&path)], extra)
        }
    };
    RunManifest::new("sweep", &parsed, outputs, extra).write(&out.join("manifest.json"))?;
    let failed = grid.cells.iter().filter(|c| c.report().is_none()).count();
    let _ = writeln!(stdout, "cells {} failed {failed}", grid.cells.len());
    for c in grid.cells.iter() {
        if let crate::sweep::CellOutcome::Failed { error } = &c.outcome {
            let _ = writeln!(stderr, "cell {} failed: {error}", c.index);
        }
    }
    Ok(())
}

fn classify(config: &Path, out: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Error> {
    let parsed = load(config)?;
    let cfg = scenario_only(&parsed)?;
    let res = run_scenario(cfg)?;
    let label = res.report.regime;
    let _ = writeln!(stdout, "{label}");
    if let Some(l) = label.lyapunov_estimate {
        let _ = writeln!(stderr, "lyapunov_per_s {l:e}");
    }
    if let Some(dir) = out {
        RunManifest::new("classify", &parsed, vec![], json!({ "regime": label.to_string() }))
            .write(&dir.join("manifest.json"))?;
    }
    Ok(())
}

fn embed(config: &Path, tau: f64, dim: usize, out: &Path, observable: ObservableArg) -> Result<(), Error> {
    let parsed = load(config)?;
    let cfg = scenario_only(&parsed)?;
    let emb = EmbeddingConfig {
        tau,
        dim,
        resample_dt: tau / 10.0,
    };
    emb.lag().map_err(|e| SweepError::Config(e.to_string()))?;
    let res = run_scenario(cfg)?;
    let obs = match observable {
        ObservableArg::Sigma => Observable::SigmaX,
        ObservableArg::Excess => Observable::Excess,
    };
    let points = portrait(cfg, &res.moments, &emb, obs)?;
    write_embedding_csv(out, &points)?;
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    RunManifest::new(
        "embed",
        &parsed,
        vec![file_name(out)],
        json!({ "tau_s": tau, "dim": dim, "resample_dt_s": emb.resample_dt }),
    )
    .write(Path::new(&manifest_path))?;
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate {
            config,
            out,
            t_end,
            fixed_dt,
        } => simulate(config, out, *t_end, *fixed_dt, stdout),
        Command::Sweep { config, out, workers } => sweep(config, out, *workers, stdout, stderr),
        Command::Classify { config, out } => classify(config, out.as_deref(), stdout, stderr),
        Command::Embed {
            config,
            tau,
            dim,
            out,
            observable,
        } => embed(config, *tau, *dim, out, *observable),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
