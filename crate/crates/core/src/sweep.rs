//! Full scenarios and parameter sweeps.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    avg_sync_error, classify, delay_embed, error_signals, sync_time, AnalysisError, ClassifyConfig, Embedding,
    EmbeddingConfig, Integrand, LyapunovConfig, OscillatorSeries, RegimeLabel, SyncReport,
};
use crate::controller::{drive_from_trajectory, simulate_controller, ControllerError, ControllerParams, ControllerState};
use crate::integrator::{IntegrationError, IntegratorSettings, Trajectory};
use crate::moments::{
    excess_variance_x, initial_state, simulate_moments, std_devs, MomentError, MomentState, OscillatorParams,
};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{scenario}: controller: {source}")]
    Controller {
        scenario: String,
        #[source]
        source: ControllerError,
    },
    #[error("{scenario}: moments: {source}")]
    Moments {
        scenario: String,
        #[source]
        source: MomentError,
    },
    #[error("{scenario}: analysis: {source}")]
    Analysis {
        scenario: String,
        #[source]
        source: AnalysisError,
    },
    #[error("aggregation: {0}")]
    Aggregation(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl SweepError {
    /// Whether the failure came from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            SweepError::Controller { source, .. } => matches!(source, ControllerError::Integration(_)),
            SweepError::Moments { source, .. } => matches!(
                source,
                MomentError::Integration(_) | MomentError::Unphysical(_) | MomentError::UnphysicalFrequency(_)
            ),
            SweepError::Analysis { source, .. } => !matches!(source, AnalysisError::Config(_)),
            _ => false,
        }
    }
}

/// Scalar used for regime classification and portraits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `sigma_1x^2 - 1/2`, which keeps relative precision at tiny occupations.
    #[default]
    Excess,
    SigmaX,
}

/// Lyapunov settings in seconds; converted to embedding samples on use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSeconds {
    pub theiler: f64,
    pub horizon: f64,
    pub fit_start: f64,
    pub fit_end: f64,
    pub max_refs: usize,
    pub min_log_growth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub steady_window: f64,
    pub rel_tol: f64,
    pub k_max: u32,
    pub sync_threshold: f64,
    pub integrand: Integrand,
    /// Sampling of the readout for peak detection.
    pub sample_dt: f64,
    pub observable: Observable,
    pub lyapunov: LyapunovSeconds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub t_end: f64,
    pub integrator: IntegratorSettings,
    /// Start of the averaging window; `None` selects the end of the transient.
    pub t0: Option<f64>,
    pub embedding: EmbeddingConfig,
    pub analysis: AnalysisSettings,
    /// Stride of rows in time-series output.
    pub output_every: usize,
}

impl RunConfig {
    /// Settings derived from the controller period `T`: RK4 at `T/1000`
    /// recording every 10th node, a 0.3 ns delay in three dimensions sampled
    /// at a tenth of the delay, and a 200-period steady window.
    pub fn defaults(controller: &ControllerParams, t_end: f64) -> Self {
        let period = controller.period();
        let embedding = EmbeddingConfig::standard();
        RunConfig {
            t_end,
            integrator: IntegratorSettings::Fixed {
                dt: 1e-3 * period,
                record_every: 10,
            },
            t0: None,
            embedding,
            analysis: AnalysisSettings {
                steady_window: 200.0 * period,
                rel_tol: 1e-3,
                k_max: 8,
                sync_threshold: 1e-3,
                integrand: Integrand::Signed,
                sample_dt: embedding.resample_dt / 6.0,
                observable: Observable::Excess,
                lyapunov: LyapunovSeconds {
                    theiler: period,
                    horizon: 20.0 * period,
                    fit_start: 0.0,
                    fit_end: 5.0 * period,
                    max_refs: 2000,
                    min_log_growth: 0.5,
                },
            },
            output_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub controller: ControllerParams,
    pub controller_initial: ControllerState,
    pub osc1: OscillatorParams,
    pub osc2: OscillatorParams,
    pub initial_sigma_x: [f64; 2],
    pub run: RunConfig,
}

fn ratio_is_integer(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let k = r.round();
    (k >= 1.0 && (r - k).abs() <= 1e-6 * k).then_some(k as usize)
}

impl ScenarioConfig {
    /// Averaging start: configured, or `max(10 / min Gamma, 50 controller periods)`.
    pub fn t0(&self) -> f64 {
        self.run.t0.unwrap_or_else(|| {
            let g = self.osc1.gamma.min(self.osc2.gamma);
            (10.0 / g).max(50.0 * self.controller.period())
        })
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let mut bad = Vec::new();
        if let Err(e) = self.controller.validate() {
            bad.push(e.to_string());
        }
        if !self.controller_initial.is_finite() {
            bad.push("initial controller state must be finite".into());
        }
        for (k, o) in [&self.osc1, &self.osc2].into_iter().enumerate() {
            if let Err(e) = o.validate() {
                bad.push(format!("oscillator {}: {e}", k + 1));
            }
        }
        if let Err(e) = initial_state(self.initial_sigma_x[0], self.initial_sigma_x[1]) {
            bad.push(e.to_string());
        }
        let r = &self.run;
        if !(r.t_end > 0.0 && r.t_end.is_finite()) {
            bad.push(format!("t_end must be > 0, got {:e}", r.t_end));
        }
        if let Err(e) = r.integrator.validate() {
            bad.push(e.to_string());
        }
        let t0 = self.t0();
        if !(t0 >= 0.0 && t0 < r.t_end) {
            bad.push(format!("t0 = {t0:e} s must lie in [0, t_end = {:e} s)", r.t_end));
        }
        if let Err(e) = r.embedding.lag() {
            bad.push(e.to_string());
        }
        let a = &r.analysis;
        if !(a.steady_window > 0.0) {
            bad.push("steady_window must be > 0".into());
        }
        if !(a.rel_tol > 0.0 && a.rel_tol < 1.0) {
            bad.push(format!("rel_tol must lie in (0, 1), got {}", a.rel_tol));
        }
        if a.k_max == 0 {
            bad.push("k_max must be >= 1".into());
        }
        if !(a.sync_threshold > 0.0) {
            bad.push("sync_threshold must be > 0".into());
        }
        if !(a.sample_dt > 0.0) || ratio_is_integer(r.embedding.resample_dt, a.sample_dt).is_none() {
            bad.push(format!(
                "sample_dt = {:e} s must divide resample_dt = {:e} s",
                a.sample_dt, r.embedding.resample_dt
            ));
        }
        if let Err(e) = self.lyapunov_samples().validate() {
            bad.push(e.to_string());
        }
        if r.output_every == 0 {
            bad.push("output_every must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SweepError::Config(format!("{}: {}", self.name, bad.join("; "))))
        }
    }

    pub fn lyapunov_samples(&self) -> LyapunovConfig {
        let dt = self.run.embedding.resample_dt;
        let l = &self.run.analysis.lyapunov;
        let n = |s: f64| (s / dt).round().max(0.0) as usize;
        LyapunovConfig {
            theiler: n(l.theiler),
            horizon: n(l.horizon),
            fit_start: n(l.fit_start),
            fit_end: n(l.fit_end),
            max_refs: l.max_refs,
        }
    }

    pub fn classify_config(&self) -> ClassifyConfig {
        let a = &self.run.analysis;
        ClassifyConfig {
            steady_window: a.steady_window,
            rel_tol: a.rel_tol,
            k_max: a.k_max,
            embedding: self.run.embedding,
            lyapunov: self.lyapunov_samples(),
            min_log_growth: a.lyapunov.min_log_growth,
        }
    }

    fn controller_error(&self, source: ControllerError) -> SweepError {
        SweepError::Controller {
            scenario: self.name.clone(),
            source,
        }
    }

    fn moment_error(&self, source: MomentError) -> SweepError {
        SweepError::Moments {
            scenario: self.name.clone(),
            source,
        }
    }

    fn analysis_error(&self, source: AnalysisError) -> SweepError {
        SweepError::Analysis {
            scenario: self.name.clone(),
            source,
        }
    }
}

pub struct ScenarioOutput {
    pub controller: Arc<Trajectory>,
    pub moments: Trajectory,
    pub report: SyncReport,
}

pub fn run_controller(cfg: &ScenarioConfig) -> Result<Arc<Trajectory>, SweepError> {
    simulate_controller(&cfg.controller, &cfg.controller_initial, cfg.run.t_end, &cfg.run.integrator)
        .map(Arc::new)
        .map_err(|e| cfg.controller_error(e))
}

/// Moments and report for a given controller trajectory.
pub fn run_with_controller(cfg: &ScenarioConfig, controller: Arc<Trajectory>) -> Result<ScenarioOutput, SweepError> {
    cfg.validate()?;
    let drive = drive_from_trajectory(controller.clone()).map_err(|e| cfg.controller_error(e))?;
    let m0 = initial_state(cfg.initial_sigma_x[0], cfg.initial_sigma_x[1]).map_err(|e| cfg.moment_error(e))?;
    let moments = simulate_moments(&m0, &drive, &cfg.osc1, &cfg.osc2, cfg.run.t_end, &cfg.run.integrator)
        .map_err(|e| cfg.moment_error(e))?;
    let report = analyze(cfg, &moments)?;
    Ok(ScenarioOutput {
        controller,
        moments,
        report,
    })
}

/// Controller run, moment run and analysis for one scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput, SweepError> {
    cfg.validate()?;
    let controller = run_controller(cfg)?;
    run_with_controller(cfg, controller)
}

/// Uniform samples of the chosen readout of oscillator 1 over `[t_start, t_end]`.
pub fn sample_readout(
    moments: &Trajectory,
    observable: Observable,
    t_start: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>), IntegrationError> {
    let t_end = moments.end();
    crate::analysis::resample_uniform(t_start.max(moments.start()), t_end, dt, |t| {
        let n = moments.interpolate_component(t, 0)?.re;
        let sq = moments.interpolate_component(t, 4)?;
        let ex = excess_variance_x(n, sq);
        Ok(match observable {
            Observable::Excess => ex,
            Observable::SigmaX => (0.5 + ex).max(0.0).sqrt(),
        })
    })
}

/// Regime label of oscillator 1 over the steady window.
pub fn classify_moments(cfg: &ScenarioConfig, moments: &Trajectory) -> Result<RegimeLabel, SweepError> {
    let a = &cfg.run.analysis;
    let start = moments.end() - a.steady_window;
    let (_, series) = sample_readout(moments, a.observable, start, a.sample_dt)
        .map_err(|e| cfg.moment_error(MomentError::Integration(e)))?;
    classify(&series, a.sample_dt, &cfg.classify_config()).map_err(|e| cfg.analysis_error(e))
}

/// Delay-embedded portrait of oscillator 1 over the steady window.
pub fn portrait(
    cfg: &ScenarioConfig,
    moments: &Trajectory,
    embedding: &EmbeddingConfig,
    observable: Observable,
) -> Result<Embedding, SweepError> {
    embedding.lag().map_err(|e| SweepError::Config(e.to_string()))?;
    let start = moments.end() - cfg.run.analysis.steady_window;
    let (_, series) = sample_readout(moments, observable, start, embedding.resample_dt)
        .map_err(|e| cfg.moment_error(MomentError::Integration(e)))?;
    delay_embed(&series, embedding).map_err(|e| cfg.analysis_error(e))
}

/// Synchronization metrics and regime for a finished moment run.
pub fn analyze(cfg: &ScenarioConfig, moments: &Trajectory) -> Result<SyncReport, SweepError> {
    let s1 = OscillatorSeries::from_moments(moments, 1);
    let s2 = OscillatorSeries::from_moments(moments, 2);
    let err = error_signals(&s1, &s2).map_err(|e| cfg.analysis_error(e))?;
    let sigma1x = s1.sigma_x();
    let a = &cfg.run.analysis;
    let e_avg = avg_sync_error(&err.times, &err.e_sigma, &sigma1x, cfg.t0(), a.integrand)
        .map_err(|e| cfg.analysis_error(e))?;
    let t_sync = sync_time(&err.times, &err.e_sigma, &sigma1x, a.sync_threshold);
    let regime = classify_moments(cfg, moments)?;
    let last = MomentState::from_slice(moments.last_state().expect("non-empty trajectory"));
    let (p1, p2) = std_devs(&last).map_err(|e| cfg.moment_error(e))?;
    Ok(SyncReport {
        e_avg,
        t_sync,
        regime,
        final_sigmas: [p1, p2],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepAxes {
    Detuning { delta_c_over_omega_c: Vec<f64> },
    Mismatch { delta_gamma: Vec<f64>, delta_g: Vec<f64> },
}

impl SweepAxes {
    pub fn len(&self) -> usize {
        match self {
            SweepAxes::Detuning { delta_c_over_omega_c } => delta_c_over_omega_c.len(),
            SweepAxes::Mismatch { delta_gamma, delta_g } => delta_gamma.len() * delta_g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of cell `index`, row-major with the first axis outermost.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        match self {
            SweepAxes::Detuning { delta_c_over_omega_c } => vec![delta_c_over_omega_c[index]],
            SweepAxes::Mismatch { delta_gamma, delta_g } => {
                vec![delta_gamma[index / delta_g.len()], delta_g[index % delta_g.len()]]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axes: SweepAxes,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.base.validate()?;
        let mut bad = Vec::new();
        match &self.axes {
            SweepAxes::Detuning { delta_c_over_omega_c } => {
                if delta_c_over_omega_c.iter().any(|v| !v.is_finite()) {
                    bad.push("detuning axis values must be finite".to_string());
                }
            }
            SweepAxes::Mismatch { delta_gamma, delta_g } => {
                for (name, axis) in [("delta_gamma", delta_gamma), ("delta_g", delta_g)] {
                    for v in axis {
                        if !v.is_finite() {
                            bad.push(format!("{name} value {v} is not finite"));
                        } else if *v >= 1.0 {
                            let what = if name == "delta_gamma" { "Gamma_2" } else { "g_2" };
                            bad.push(format!("{name} = {v} >= 1 makes {what} <= 0"));
                        }
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SweepError::Config(bad.join("; ")))
        }
    }

    /// Scenario of cell `index`.
    pub fn cell_config(&self, index: usize) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        match &self.axes {
            SweepAxes::Detuning { delta_c_over_omega_c } => {
                let r = delta_c_over_omega_c[index];
                cfg.controller.delta_c = r * cfg.controller.omega_c;
                cfg.name = format!("{} [delta_c/omega_c = {r}]", self.base.name);
            }
            SweepAxes::Mismatch { .. } => {
                let c = self.axes.coords(index);
                cfg.osc2 = mismatched(&cfg.osc1, c[0], c[1]);
                cfg.name = format!("{} [delta_gamma = {}, delta_g = {}]", self.base.name, c[0], c[1]);
            }
        }
        cfg
    }
}

/// Oscillator 2 from oscillator 1: `Gamma_2 = Gamma_1 (1 - dG)`, `g_2 = g_1 (1 - dg)`.
pub fn mismatched(osc1: &OscillatorParams, delta_gamma: f64, delta_g: f64) -> OscillatorParams {
    OscillatorParams {
        gamma: osc1.gamma * (1.0 - delta_gamma),
        g: osc1.g * (1.0 - delta_g),
        ..*osc1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok { report: SyncReport },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub coords: Vec<f64>,
    pub outcome: CellOutcome,
}

impl GridCell {
    pub fn report(&self) -> Option<&SyncReport> {
        match &self.outcome {
            CellOutcome::Ok { report } => Some(report),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub tool_version: String,
    /// Hash of the shared controller trajectory in mismatch sweeps.
    pub drive_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub axes: SweepAxes,
    pub cells: Vec<GridCell>,
    pub provenance: Provenance,
}

impl GridResult {
    pub fn cell_at(&self, coords: &[f64]) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.coords == coords)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical JSON form of a resolved configuration.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("configuration serializes"))
}

/// SHA-256 over the node times and states of a trajectory.
pub fn trajectory_hash(traj: &Trajectory) -> String {
    let mut h = Sha256::new();
    for t in traj.times() {
        h.update(t.to_le_bytes());
    }
    for z in traj.raw_states() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Orders completed cells by index, rejecting missing and duplicate indices.
pub fn aggregate(
    axes: &SweepAxes,
    cells: Vec<(usize, CellOutcome)>,
    provenance: Provenance,
) -> Result<GridResult, SweepError> {
    let n = axes.len();
    let mut slots: Vec<Option<CellOutcome>> = vec![None; n];
    for (index, outcome) in cells {
        if index >= n {
            return Err(SweepError::Aggregation(format!("cell index {index} outside grid of {n}")));
        }
        if slots[index].replace(outcome).is_some() {
            return Err(SweepError::Aggregation(format!("duplicate result for cell {index}")));
        }
    }
    let cells = slots
        .into_iter()
        .enumerate()
        .map(|(index, slot)| {
            slot.map(|outcome| GridCell {
                index,
                coords: axes.coords(index),
                outcome,
            })
            .ok_or_else(|| SweepError::Aggregation(format!("missing result for cell {index}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridResult {
        axes: axes.clone(),
        cells,
        provenance,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, SweepError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))
}

fn cell_outcome(r: Result<SyncReport, SweepError>) -> CellOutcome {
    match r {
        Ok(report) => CellOutcome::Ok { report },
        Err(e) => CellOutcome::Failed { error: e.to_string() },
    }
}

pub struct DetuningSweep {
    pub grid: GridResult,
    /// Delay-embedded portrait of oscillator 1 per cell, `None` for failed cells.
    pub portraits: Vec<Option<Embedding>>,
}

/// One full scenario per detuning, run on `workers` threads.
pub fn sweep_detuning(spec: &SweepSpec, workers: usize) -> Result<DetuningSweep, SweepError> {
    if !matches!(spec.axes, SweepAxes::Detuning { .. }) {
        return Err(SweepError::Config("sweep_detuning needs a detuning axis".into()));
    }
    spec.validate()?;
    let n = spec.axes.len();
    let results: Vec<(usize, CellOutcome, Option<Embedding>)> = pool(workers)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let cfg = spec.cell_config(i);
                let r = run_scenario(&cfg).and_then(|out| {
                    let p = portrait(&cfg, &out.moments, &cfg.run.embedding, Observable::SigmaX)?;
                    Ok((out.report, p))
                });
                match r {
                    Ok((report, p)) => (i, CellOutcome::Ok { report }, Some(p)),
                    Err(e) => (i, CellOutcome::Failed { error: e.to_string() }, None),
                }
            })
            .collect()
    });
    let mut portraits = vec![None; n];
    let mut cells = Vec::with_capacity(n);
    for (i, c, p) in results {
        if i < n {
            portraits[i] = p;
        }
        cells.push((i, c));
    }
    let provenance = Provenance {
        config_hash: config_hash(spec),
        tool_version: TOOL_VERSION.into(),
        drive_hash: None,
    };
    Ok(DetuningSweep {
        grid: aggregate(&spec.axes, cells, provenance)?,
        portraits,
    })
}

/// Mismatch grid sharing one controller run across all cells.
pub fn sweep_mismatch(spec: &SweepSpec, workers: usize) -> Result<GridResult, SweepError> {
    if !matches!(spec.axes, SweepAxes::Mismatch { .. }) {
        return Err(SweepError::Config("sweep_mismatch needs mismatch axes".into()));
    }
    spec.validate()?;
    let n = spec.axes.len();
    let mut provenance = Provenance {
        config_hash: config_hash(spec),
        tool_version: TOOL_VERSION.into(),
        drive_hash: None,
    };
    if n == 0 {
        return aggregate(&spec.axes, Vec::new(), provenance);
    }
    let controller = run_controller(&spec.base)?;
    provenance.drive_hash = Some(trajectory_hash(&controller));
    let cells: Vec<(usize, CellOutcome)> = pool(workers)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let cfg = spec.cell_config(i);
                (i, cell_outcome(run_with_controller(&cfg, controller.clone()).map(|o| o.report)))
            })
            .collect()
    });
    aggregate(&spec.axes, cells, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Regime;
    use crate::moments::SigmaPair;

    const GHZ: f64 = 2.0 * std::f64::consts::PI * 1e9;

    fn small_scenario() -> ScenarioConfig {
        let controller = ControllerParams {
            delta_c: -0.4 * GHZ,
            gamma_c: GHZ,
            g_c: 1e-3 * GHZ,
            mech_gamma_c: 1e-3 * GHZ,
            omega_c: GHZ,
            eps_c: 20.0 * GHZ,
            delta_1: -0.02 * GHZ,
            delta_2: -0.02 * GHZ,
            gamma_1: 0.01 * GHZ,
            gamma_2: 0.01 * GHZ,
            eps_1: 0.0,
            eps_2: 0.0,
        };
        let osc = OscillatorParams {
            omega: 0.01 * GHZ,
            gamma: 0.1 * GHZ,
            g: 1e-5 * GHZ,
            temperature: 0.002,
        };
        let mut run = RunConfig::defaults(&controller, 60e-9);
        run.integrator = IntegratorSettings::Fixed {
            dt: 2e-12,
            record_every: 5,
        };
        run.analysis.steady_window = 5e-9;
        run.analysis.lyapunov.horizon = 4e-9;
        run.analysis.lyapunov.fit_end = 1e-9;
        ScenarioConfig {
            name: "small".into(),
            controller,
            controller_initial: ControllerState::default(),
            osc1: osc,
            osc2: osc,
            initial_sigma_x: [1.5f64.sqrt(), 10.5f64.sqrt()],
            run,
        }
    }

    fn dummy_report(e: f64) -> CellOutcome {
        CellOutcome::Ok {
            report: SyncReport {
                e_avg: e,
                t_sync: None,
                regime: RegimeLabel::new(Regime::Undetermined),
                final_sigmas: [SigmaPair {
                    sigma_x: 1.0,
                    sigma_p: 1.0,
                }; 2],
            },
        }
    }

    fn prov() -> Provenance {
        Provenance {
            config_hash: "x".into(),
            tool_version: TOOL_VERSION.into(),
            drive_hash: None,
        }
    }

    #[test]
    fn aggregate_is_order_independent() {
        let axes = SweepAxes::Mismatch {
            delta_gamma: vec![0.0, 0.2],
            delta_g: vec![0.0, 0.1, 0.2],
        };
        let fwd: Vec<_> = (0..6).map(|i| (i, dummy_report(i as f64))).collect();
        let rev: Vec<_> = fwd.iter().rev().cloned().collect();
        let a = aggregate(&axes, fwd, prov()).unwrap();
        let b = aggregate(&axes, rev, prov()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.cells[4].coords, vec![0.2, 0.1]);
    }

    #[test]
    fn aggregate_names_missing_and_duplicate_cells() {
        let axes = SweepAxes::Detuning {
            delta_c_over_omega_c: vec![-0.4, -0.6, -0.8],
        };
        let e = aggregate(&axes, vec![(0, dummy_report(0.0)), (2, dummy_report(0.0))], prov()).unwrap_err();
        assert!(e.to_string().contains("cell 1"), "{e}");
        let e = aggregate(&axes, vec![(0, dummy_report(0.0)), (0, dummy_report(0.0))], prov()).unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
    }

    #[test]
    fn single_cell_passthrough() {
        let axes = SweepAxes::Detuning {
            delta_c_over_omega_c: vec![-0.4],
        };
        let g = aggregate(&axes, vec![(0, dummy_report(0.5))], prov()).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0].outcome, dummy_report(0.5));
    }

    #[test]
    fn mismatch_rejects_nonpositive_oscillator_two() {
        let spec = SweepSpec {
            base: small_scenario(),
            axes: SweepAxes::Mismatch {
                delta_gamma: vec![1.2],
                delta_g: vec![0.0],
            },
        };
        let e = spec.validate().unwrap_err();
        assert!(e.to_string().contains("Gamma_2"), "{e}");
    }

    #[test]
    fn mismatch_is_multiplicative() {
        let o = small_scenario().osc1;
        let m = mismatched(&o, 0.4, 0.1);
        assert_eq!(m.gamma, o.gamma * 0.6);
        assert_eq!(m.g, o.g * 0.9);
        assert_eq!(m.omega, o.omega);
    }

    #[test]
    fn empty_axis_gives_empty_grid() {
        let spec = SweepSpec {
            base: small_scenario(),
            axes: SweepAxes::Mismatch {
                delta_gamma: vec![],
                delta_g: vec![0.0],
            },
        };
        assert!(sweep_mismatch(&spec, 1).unwrap().cells.is_empty());
    }

    #[test]
    fn default_t0_is_end_of_transient() {
        let cfg = small_scenario();
        let expected = (10.0 / cfg.osc1.gamma).max(50.0 * cfg.controller.period());
        assert_eq!(cfg.t0(), expected);
    }

    #[test]
    fn identical_oscillators_synchronize() {
        let mut cfg = small_scenario();
        cfg.initial_sigma_x = [1.5f64.sqrt(); 2];
        let out = run_scenario(&cfg).unwrap();
        assert!(out.report.e_avg <= 1e-12);
        assert_eq!(out.report.t_sync, Some(0.0));
    }

    #[test]
    fn different_initial_sigmas_converge() {
        let out = run_scenario(&small_scenario()).unwrap();
        let t = out.report.t_sync.expect("synchronizes");
        assert!(t > 0.0 && t < 60e-9);
        let [a, b] = out.report.final_sigmas;
        assert!((a.sigma_x - b.sigma_x).abs() < 1e-6);
    }

    #[test]
    fn undriven_scenario_is_period_one() {
        let mut cfg = small_scenario();
        cfg.controller.eps_c = 0.0;
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.report.regime.regime, Regime::Period(1));
    }

    #[test]
    fn parallel_matches_serial() {
        let mut base = small_scenario();
        base.run.t_end = 30e-9;
        base.run.t0 = Some(10e-9);
        let spec = SweepSpec {
            base,
            axes: SweepAxes::Mismatch {
                delta_gamma: vec![0.0, 0.3],
                delta_g: vec![0.0, 0.5],
            },
        };
        let a = sweep_mismatch(&spec, 1).unwrap();
        let b = sweep_mismatch(&spec, 3).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        assert!(a.provenance.drive_hash.is_some());
        assert!(a.cells[0].report().unwrap().e_avg < 1e-2);
    }
}
