//! JSON configuration documents.
//!
//! Frequencies are written as `nu = omega / 2pi` in GHz and marked with
//! `"units": "GHz_over_2pi"`. Times are in seconds, temperatures in kelvin.
//! Physical parameters are always required; run and analysis settings fall
//! back to defaults derived from the controller period.

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::analysis::{EmbeddingConfig, Integrand};
use crate::controller::{ControllerParams, ControllerState};
use crate::integrator::{IntegratorSettings, ToleranceSettings};
use crate::moments::OscillatorParams;
use crate::sweep::{Observable, RunConfig, ScenarioConfig, SweepAxes, SweepError, SweepSpec};

pub const UNITS_MARKER: &str = "GHz_over_2pi";

/// rad/s per GHz of ordinary frequency.
pub const RAD_PER_S_PER_GHZ: f64 = 2.0 * std::f64::consts::PI * 1e9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed document: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    Scenario(ScenarioConfig),
    Sweep(SweepSpec),
}

impl ParsedConfig {
    pub fn base(&self) -> &ScenarioConfig {
        match self {
            ParsedConfig::Scenario(s) => s,
            ParsedConfig::Sweep(s) => &s.base,
        }
    }

    pub fn base_mut(&mut self) -> &mut ScenarioConfig {
        match self {
            ParsedConfig::Scenario(s) => s,
            ParsedConfig::Sweep(s) => &mut s.base,
        }
    }

    pub fn hash(&self) -> String {
        match self {
            ParsedConfig::Scenario(s) => crate::sweep::config_hash(s),
            ParsedConfig::Sweep(s) => crate::sweep::config_hash(s),
        }
    }

    pub fn resolved_json(&self) -> Value {
        match self {
            ParsedConfig::Scenario(s) => serde_json::to_value(s),
            ParsedConfig::Sweep(s) => serde_json::to_value(s),
        }
        .expect("configuration serializes")
    }
}

pub fn ghz_to_rad_s(nu: f64) -> f64 {
    nu * RAD_PER_S_PER_GHZ
}

/// Inverse of [`ghz_to_rad_s`] that converts back to exactly `omega`.
///
/// Several inputs can round to the same product; the one with the shortest
/// decimal form is returned so that typed values are reproduced.
pub fn rad_s_to_ghz(omega: f64) -> f64 {
    let mut x = omega / RAD_PER_S_PER_GHZ;
    for _ in 0..4 {
        let y = ghz_to_rad_s(x);
        if y == omega {
            break;
        }
        x = if y < omega { x.next_up() } else { x.next_down() };
    }
    if ghz_to_rad_s(x) != omega {
        return x;
    }
    let mut best = x;
    let mut best_len = x.to_string().len();
    for step in [f64::next_down, f64::next_up] {
        let mut c = step(x);
        while ghz_to_rad_s(c) == omega {
            let len = c.to_string().len();
            if len < best_len {
                best = c;
                best_len = len;
            }
            c = step(c);
        }
    }
    best
}

struct Errors(Vec<String>);

impl Errors {
    fn push(&mut self, msg: String) {
        self.0.push(msg);
    }
}

/// Keyed access to one JSON object that records missing, mistyped and unknown keys.
struct Section {
    path: String,
    map: Map<String, Value>,
}

impl Section {
    fn root(v: Value, errs: &mut Errors) -> Section {
        match v {
            Value::Object(map) => Section { path: String::new(), map },
            _ => {
                errs.push("document must be a JSON object".into());
                Section {
                    path: String::new(),
                    map: Map::new(),
                }
            }
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    /// Required sub-object. A missing one yields an empty section, so every
    /// required field inside it is reported individually.
    fn section(&mut self, k: &str, errs: &mut Errors) -> Section {
        let path = self.key(k);
        match self.map.remove(k) {
            Some(Value::Object(map)) => Section { path, map },
            Some(_) => {
                errs.push(format!("`{path}` must be an object"));
                Section { path, map: Map::new() }
            }
            None => Section { path, map: Map::new() },
        }
    }

    fn opt_section(&mut self, k: &str, errs: &mut Errors) -> Option<Section> {
        if self.map.contains_key(k) {
            Some(self.section(k, errs))
        } else {
            None
        }
    }

    fn has(&self, k: &str) -> bool {
        self.map.contains_key(k)
    }

    fn opt_num(&mut self, k: &str, errs: &mut Errors) -> Option<f64> {
        let v = self.map.remove(k)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                errs.push(format!("`{}` must be a finite number", self.key(k)));
                None
            }
        }
    }

    fn num(&mut self, k: &str, errs: &mut Errors) -> Option<f64> {
        if !self.has(k) {
            errs.push(format!("missing field `{}`", self.key(k)));
            return None;
        }
        self.opt_num(k, errs)
    }

    fn opt_uint(&mut self, k: &str, errs: &mut Errors) -> Option<u64> {
        let v = self.map.remove(k)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                errs.push(format!("`{}` must be a non-negative integer", self.key(k)));
                None
            }
        }
    }

    fn opt_str(&mut self, k: &str, errs: &mut Errors) -> Option<String> {
        let v = self.map.remove(k)?;
        match v {
            Value::String(s) => Some(s),
            _ => {
                errs.push(format!("`{}` must be a string", self.key(k)));
                None
            }
        }
    }

    fn opt_num_list(&mut self, k: &str, errs: &mut Errors) -> Option<Vec<f64>> {
        let v = self.map.remove(k)?;
        let path = self.key(k);
        match v {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    match item.as_f64() {
                        Some(x) => out.push(x),
                        None => {
                            errs.push(format!("`{path}[{i}]` must be a number"));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            _ => {
                errs.push(format!("`{path}` must be an array of numbers"));
                None
            }
        }
    }

    fn complex(&mut self, k: &str, errs: &mut Errors) -> Option<Complex64> {
        let path = self.key(k);
        let v = self.opt_num_list(k, errs)?;
        if v.len() != 2 {
            errs.push(format!("`{path}` must be [re, im]"));
            return None;
        }
        Some(Complex64::new(v[0], v[1]))
    }

    fn finish(self, errs: &mut Errors) {
        for k in self.map.keys() {
            errs.push(format!("unknown field `{}`", self.key(k)));
        }
    }
}

fn ghz(s: &mut Section, k: &str, errs: &mut Errors) -> Option<f64> {
    s.num(k, errs).map(ghz_to_rad_s)
}

fn parse_controller(s: &mut Section, errs: &mut Errors) -> (Option<ControllerParams>, ControllerState) {
    let mut c = s.section("controller", errs);
    let vals: Vec<Option<f64>> = [
        "delta_c",
        "gamma_c",
        "g_c",
        "mech_gamma_c",
        "omega_c",
        "eps_c",
        "delta_1",
        "delta_2",
        "gamma_1",
        "gamma_2",
        "eps_1",
        "eps_2",
    ]
    .iter()
    .map(|k| ghz(&mut c, k, errs))
    .collect();
    let mut init = ControllerState::default();
    if let Some(mut is) = c.opt_section("initial_state", errs) {
        for (k, slot) in [
            ("alpha_c", &mut init.alpha_c),
            ("beta_c", &mut init.beta_c),
            ("alpha_1", &mut init.alpha_1),
            ("alpha_2", &mut init.alpha_2),
        ] {
            if let Some(z) = is.complex(k, errs) {
                *slot = z;
            }
        }
        is.finish(errs);
    }
    c.finish(errs);
    let p = if vals.iter().all(Option::is_some) {
        let v: Vec<f64> = vals.into_iter().flatten().collect();
        Some(ControllerParams {
            delta_c: v[0],
            gamma_c: v[1],
            g_c: v[2],
            mech_gamma_c: v[3],
            omega_c: v[4],
            eps_c: v[5],
            delta_1: v[6],
            delta_2: v[7],
            gamma_1: v[8],
            gamma_2: v[9],
            eps_1: v[10],
            eps_2: v[11],
        })
    } else {
        None
    };
    (p, init)
}

fn parse_oscillator(mut o: Section, errs: &mut Errors) -> Option<OscillatorParams> {
    let omega = ghz(&mut o, "omega", errs);
    let gamma = ghz(&mut o, "gamma", errs);
    let g = ghz(&mut o, "g", errs);
    let temperature = o.num("temperature_k", errs);
    o.finish(errs);
    Some(OscillatorParams {
        omega: omega?,
        gamma: gamma?,
        g: g?,
        temperature: temperature?,
    })
}

fn parse_integrator(s: Option<Section>, defaults: IntegratorSettings, errs: &mut Errors) -> IntegratorSettings {
    let Some(mut s) = s else { return defaults };
    let default_every = match defaults {
        IntegratorSettings::Fixed { record_every, .. } | IntegratorSettings::Adaptive { record_every, .. } => {
            record_every
        }
    };
    let scheme = s.opt_str("scheme", errs).unwrap_or_else(|| "rk4".into());
    let record_every = s.opt_uint("record_every", errs).map_or(default_every, |v| v as usize);
    let out = match scheme.as_str() {
        "rk4" => {
            let dt = match defaults {
                IntegratorSettings::Fixed { dt, .. } => dt,
                IntegratorSettings::Adaptive { .. } => unreachable!("defaults use the fixed scheme"),
            };
            IntegratorSettings::Fixed {
                dt: s.opt_num("dt_s", errs).unwrap_or(dt),
                record_every,
            }
        }
        "dopri5" => {
            let rtol = s.num("rtol", errs).unwrap_or(f64::NAN);
            let atol = s.num("atol", errs).unwrap_or(f64::NAN);
            let dt_max = s.num("dt_max_s", errs).unwrap_or(f64::NAN);
            let dt_init = s.opt_num("dt_init_s", errs).unwrap_or(dt_max * 1e-3);
            let dt_min = s.opt_num("dt_min_s", errs).unwrap_or(dt_max * 1e-12);
            IntegratorSettings::Adaptive {
                tol: ToleranceSettings {
                    rtol,
                    atol,
                    dt_init,
                    dt_min,
                    dt_max,
                },
                record_every,
            }
        }
        other => {
            errs.push(format!("`{}` must be \"rk4\" or \"dopri5\", got \"{other}\"", s.key("scheme")));
            defaults
        }
    };
    s.finish(errs);
    out
}

fn parse_run(s: &mut Section, controller: Option<&ControllerParams>, errs: &mut Errors) -> Option<RunConfig> {
    let mut r = s.section("run", errs);
    let t_end = r.num("t_end_s", errs);
    // Defaults need the controller period; fall back to 1 GHz only to keep
    // collecting errors when the controller itself is incomplete.
    let fallback = ControllerParams {
        omega_c: RAD_PER_S_PER_GHZ,
        delta_c: 0.0,
        gamma_c: 0.0,
        g_c: 0.0,
        mech_gamma_c: 0.0,
        eps_c: 0.0,
        delta_1: 0.0,
        delta_2: 0.0,
        gamma_1: 0.0,
        gamma_2: 0.0,
        eps_1: 0.0,
        eps_2: 0.0,
    };
    let mut run = RunConfig::defaults(controller.unwrap_or(&fallback), t_end.unwrap_or(0.0));
    run.t0 = r.opt_num("t0_s", errs);
    let integ = r.opt_section("integrator", errs);
    run.integrator = parse_integrator(integ, run.integrator, errs);
    if let Some(mut e) = r.opt_section("embedding", errs) {
        let tau = e.opt_num("tau_s", errs).unwrap_or(run.embedding.tau);
        let dim = e.opt_uint("dim", errs).map_or(run.embedding.dim, |d| d as usize);
        let resample_dt = e.opt_num("resample_dt_s", errs).unwrap_or(tau / 10.0);
        run.embedding = EmbeddingConfig { tau, dim, resample_dt };
        e.finish(errs);
    }
    let a = &mut run.analysis;
    a.sample_dt = run.embedding.resample_dt / 6.0;
    if let Some(mut s) = r.opt_section("analysis", errs) {
        if let Some(v) = s.opt_num("steady_window_s", errs) {
            a.steady_window = v;
        }
        if let Some(v) = s.opt_num("rel_tol", errs) {
            a.rel_tol = v;
        }
        if let Some(v) = s.opt_uint("k_max", errs) {
            a.k_max = v.min(u32::MAX as u64) as u32;
        }
        if let Some(v) = s.opt_num("sync_threshold", errs) {
            a.sync_threshold = v;
        }
        if let Some(v) = s.opt_num("sample_dt_s", errs) {
            a.sample_dt = v;
        }
        match s.opt_str("integrand", errs).as_deref() {
            None => {}
            Some("signed") => a.integrand = Integrand::Signed,
            Some("absolute") => a.integrand = Integrand::Absolute,
            Some(o) => errs.push(format!("`run.analysis.integrand` must be \"signed\" or \"absolute\", got \"{o}\"")),
        }
        match s.opt_str("observable", errs).as_deref() {
            None => {}
            Some("excess") => a.observable = Observable::Excess,
            Some("sigma_x") => a.observable = Observable::SigmaX,
            Some(o) => errs.push(format!("`run.analysis.observable` must be \"excess\" or \"sigma_x\", got \"{o}\"")),
        }
        if let Some(mut l) = s.opt_section("lyapunov", errs) {
            let ly = &mut a.lyapunov;
            for (k, slot) in [
                ("theiler_s", &mut ly.theiler),
                ("horizon_s", &mut ly.horizon),
                ("fit_start_s", &mut ly.fit_start),
                ("fit_end_s", &mut ly.fit_end),
                ("min_log_growth", &mut ly.min_log_growth),
            ] {
                if let Some(v) = l.opt_num(k, errs) {
                    *slot = v;
                }
            }
            if let Some(v) = l.opt_uint("max_refs", errs) {
                ly.max_refs = v as usize;
            }
            l.finish(errs);
        }
        s.finish(errs);
    }
    if let Some(v) = r.opt_uint("output_every", errs) {
        run.output_every = v as usize;
    }
    r.finish(errs);
    t_end.map(|_| run)
}

fn parse_axes(s: &mut Section, errs: &mut Errors) -> Option<SweepAxes> {
    let mut sw = s.opt_section("sweep", errs)?;
    let det = sw.opt_num_list("delta_c_over_omega_c", errs);
    let dg = sw.opt_num_list("delta_gamma", errs);
    let dgg = sw.opt_num_list("delta_g", errs);
    let has_mismatch = dg.is_some() || dgg.is_some();
    sw.finish(errs);
    match (det, has_mismatch) {
        (Some(_), true) => {
            errs.push("`sweep` cannot combine a detuning axis with mismatch axes".into());
            None
        }
        (Some(v), false) => Some(SweepAxes::Detuning { delta_c_over_omega_c: v }),
        (None, true) => Some(SweepAxes::Mismatch {
            delta_gamma: dg.unwrap_or_else(|| vec![0.0]),
            delta_g: dgg.unwrap_or_else(|| vec![0.0]),
        }),
        (None, false) => {
            errs.push("`sweep` needs `delta_c_over_omega_c` or `delta_gamma`/`delta_g`".into());
            None
        }
    }
}

/// Parses, unit-converts and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let value: Value = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
    };
    let mut errs = Errors(Vec::new());
    let mut root = Section::root(value, &mut errs);
    match root.opt_str("units", &mut errs).as_deref() {
        Some(UNITS_MARKER) => {}
        Some(other) => errs.push(format!("`units` must be \"{UNITS_MARKER}\", got \"{other}\"")),
        None if root.has("units") => {}
        None => errs.push("missing field `units`".into()),
    }
    let name = root.opt_str("name", &mut errs).unwrap_or_else(|| "scenario".into());
    let (controller, controller_initial) = parse_controller(&mut root, &mut errs);
    let axes = parse_axes(&mut root, &mut errs);
    let mismatch = matches!(axes, Some(SweepAxes::Mismatch { .. }));
    let osc1 = {
        let s = root.section("oscillator_1", &mut errs);
        parse_oscillator(s, &mut errs)
    };
    let osc2 = if mismatch {
        if root.has("oscillator_2") {
            errs.push("`oscillator_2` is derived from `oscillator_1` in mismatch sweeps; remove it".into());
            root.map.remove("oscillator_2");
        }
        osc1
    } else {
        let s = root.section("oscillator_2", &mut errs);
        parse_oscillator(s, &mut errs)
    };
    let sigmas = if root.has("initial_sigma_x") {
        match root.opt_num_list("initial_sigma_x", &mut errs) {
            Some(v) if v.len() == 2 => Some([v[0], v[1]]),
            Some(_) => {
                errs.push("`initial_sigma_x` must hold two values".into());
                None
            }
            None => None,
        }
    } else {
        errs.push("missing field `initial_sigma_x`".into());
        None
    };
    let run = parse_run(&mut root, controller.as_ref(), &mut errs);
    root.finish(&mut errs);
    if !errs.0.is_empty() {
        return Err(ConfigError::Invalid(errs.0));
    }
    let base = ScenarioConfig {
        name,
        controller: controller.expect("checked"),
        controller_initial,
        osc1: osc1.expect("checked"),
        osc2: osc2.expect("checked"),
        initial_sigma_x: sigmas.expect("checked"),
        run: run.expect("checked"),
    };
    let parsed = match axes {
        None => ParsedConfig::Scenario(base),
        Some(axes) => ParsedConfig::Sweep(SweepSpec { base, axes }),
    };
    let check = match &parsed {
        ParsedConfig::Scenario(s) => s.validate(),
        ParsedConfig::Sweep(s) => s.validate(),
    };
    match check {
        Ok(()) => Ok(parsed),
        Err(SweepError::Config(msg)) => Err(ConfigError::Invalid(vec![msg])),
        Err(e) => Err(ConfigError::Invalid(vec![e.to_string()])),
    }
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Normalized document for a resolved configuration, with every default
/// written out. Parsing it gives back an identical configuration.
pub fn to_document(cfg: &ParsedConfig) -> Value {
    let b = cfg.base();
    let c = &b.controller;
    let f = rad_s_to_ghz;
    let osc = |o: &OscillatorParams| {
        json!({
            "omega": f(o.omega),
            "gamma": f(o.gamma),
            "g": f(o.g),
            "temperature_k": o.temperature,
        })
    };
    let r = &b.run;
    let integrator = match r.integrator {
        IntegratorSettings::Fixed { dt, record_every } => json!({
            "scheme": "rk4",
            "dt_s": dt,
            "record_every": record_every,
        }),
        IntegratorSettings::Adaptive { tol, record_every } => json!({
            "scheme": "dopri5",
            "rtol": tol.rtol,
            "atol": tol.atol,
            "dt_init_s": tol.dt_init,
            "dt_min_s": tol.dt_min,
            "dt_max_s": tol.dt_max,
            "record_every": record_every,
        }),
    };
    let a = &r.analysis;
    let mut run = json!({
        "t_end_s": r.t_end,
        "integrator": integrator,
        "embedding": {
            "tau_s": r.embedding.tau,
            "dim": r.embedding.dim,
            "resample_dt_s": r.embedding.resample_dt,
        },
        "analysis": {
            "steady_window_s": a.steady_window,
            "rel_tol": a.rel_tol,
            "k_max": a.k_max,
            "sync_threshold": a.sync_threshold,
            "sample_dt_s": a.sample_dt,
            "integrand": match a.integrand { Integrand::Signed => "signed", Integrand::Absolute => "absolute" },
            "observable": match a.observable { Observable::Excess => "excess", Observable::SigmaX => "sigma_x" },
            "lyapunov": {
                "theiler_s": a.lyapunov.theiler,
                "horizon_s": a.lyapunov.horizon,
                "fit_start_s": a.lyapunov.fit_start,
                "fit_end_s": a.lyapunov.fit_end,
                "max_refs": a.lyapunov.max_refs,
                "min_log_growth": a.lyapunov.min_log_growth,
            },
        },
        "output_every": r.output_every,
    });
    if let Some(t0) = r.t0 {
        run["t0_s"] = json!(t0);
    }
    let ci = &b.controller_initial;
    let mut doc = json!({
        "units": UNITS_MARKER,
        "name": b.name,
        "controller": {
            "delta_c": f(c.delta_c),
            "gamma_c": f(c.gamma_c),
            "g_c": f(c.g_c),
            "mech_gamma_c": f(c.mech_gamma_c),
            "omega_c": f(c.omega_c),
            "eps_c": f(c.eps_c),
            "delta_1": f(c.delta_1),
            "delta_2": f(c.delta_2),
            "gamma_1": f(c.gamma_1),
            "gamma_2": f(c.gamma_2),
            "eps_1": f(c.eps_1),
            "eps_2": f(c.eps_2),
            "initial_state": {
                "alpha_c": complex_json(ci.alpha_c),
                "beta_c": complex_json(ci.beta_c),
                "alpha_1": complex_json(ci.alpha_1),
                "alpha_2": complex_json(ci.alpha_2),
            },
        },
        "oscillator_1": osc(&b.osc1),
        "initial_sigma_x": b.initial_sigma_x,
        "run": run,
    });
    match cfg {
        ParsedConfig::Scenario(_) => {
            doc["oscillator_2"] = osc(&b.osc2);
        }
        ParsedConfig::Sweep(s) => match &s.axes {
            SweepAxes::Detuning { delta_c_over_omega_c } => {
                doc["oscillator_2"] = osc(&b.osc2);
                doc["sweep"] = json!({ "delta_c_over_omega_c": delta_c_over_omega_c });
            }
            SweepAxes::Mismatch { delta_gamma, delta_g } => {
                doc["sweep"] = json!({ "delta_gamma": delta_gamma, "delta_g": delta_g });
            }
        },
    }
    doc
}
