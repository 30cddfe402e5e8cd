//! C ABI over the apdsync simulator.
//!
//! Configurations and finished runs are opaque handles owned by the caller
//! and released with the matching `_free` function. Every fallible call
//! returns an [`ApdStatus`]; the message of the last failure on the calling
//! thread is available from [`apd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use apdsync::analysis::{OscillatorSeries, Regime};
use apdsync::moments::{thermal_occupation, PhysicalConstants};
use apdsync::sweep::{run_scenario, ScenarioOutput};
use apdsync::{parse_config, ParsedConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    NumericalError = 4,
    BufferTooSmall = 5,
    WrongKind = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApdSeries {
    Time = 0,
    Sigma1X = 1,
    Sigma2X = 2,
    ESigma = 3,
    ENb = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApdRegimeKind {
    Periodic = 0,
    Chaotic = 1,
    Undetermined = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApdSyncReport {
    pub e_avg: f64,
    /// NaN when the oscillators never synchronize.
    pub t_sync_s: f64,
    pub regime: ApdRegimeKind,
    /// Period for `Periodic`, 0 otherwise.
    pub period: u32,
    /// NaN when no estimate was made.
    pub lyapunov_per_s: f64,
    pub sigma1_x: f64,
    pub sigma1_p: f64,
    pub sigma2_x: f64,
    pub sigma2_p: f64,
}

/// Parsed configuration.
pub struct ApdConfig(ParsedConfig);

/// Finished scenario run.
pub struct ApdRun(ScenarioOutput);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: ApdStatus, msg: impl Into<String>) -> ApdStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> ApdStatus) -> ApdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ApdStatus::Panic, "internal panic"),
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the length needed including the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn apd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn apd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses a JSON configuration document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apd_config_parse(json: *const c_char, out: *mut *mut ApdConfig) -> ApdStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(ApdStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(ApdStatus::InvalidUtf8, "configuration is not valid UTF-8");
        };
        match parse_config(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(ApdConfig(cfg)));
                ApdStatus::Ok
            }
            Err(e) => fail(ApdStatus::ConfigError, e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`apd_config_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn apd_config_free(cfg: *mut ApdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// 1 if the configuration describes a sweep, 0 for a single scenario or null.
///
/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apd_config_is_sweep(cfg: *const ApdConfig) -> i32 {
    match cfg.as_ref() {
        Some(ApdConfig(ParsedConfig::Sweep(_))) => 1,
        _ => 0,
    }
}

/// Runs a single-scenario configuration.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apd_scenario_run(cfg: *const ApdConfig, out: *mut *mut ApdRun) -> ApdStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(ApdStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        let ParsedConfig::Scenario(s) = &cfg.0 else {
            return fail(ApdStatus::WrongKind, "configuration describes a sweep");
        };
        match run_scenario(s) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(ApdRun(r)));
                ApdStatus::Ok
            }
            Err(e) if e.is_numerical() => fail(ApdStatus::NumericalError, e.to_string()),
            Err(e) => fail(ApdStatus::ConfigError, e.to_string()),
        }
    })
}

/// # Safety
/// `run` must be null or a handle from [`apd_scenario_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn apd_run_free(run: *mut ApdRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apd_run_report(run: *const ApdRun, out: *mut ApdSyncReport) -> ApdStatus {
    guard(|| {
        let (Some(run), Some(out)) = (run.as_ref(), out.as_mut()) else {
            return fail(ApdStatus::NullPointer, "null argument");
        };
        let r = &run.0.report;
        let (regime, period) = match r.regime.regime {
            Regime::Period(k) => (ApdRegimeKind::Periodic, k),
            Regime::Chaotic => (ApdRegimeKind::Chaotic, 0),
            Regime::Undetermined => (ApdRegimeKind::Undetermined, 0),
        };
        *out = ApdSyncReport {
            e_avg: r.e_avg,
            t_sync_s: r.t_sync.unwrap_or(f64::NAN),
            regime,
            period,
            lyapunov_per_s: r.regime.lyapunov_estimate.unwrap_or(f64::NAN),
            sigma1_x: r.final_sigmas[0].sigma_x,
            sigma1_p: r.final_sigmas[0].sigma_p,
            sigma2_x: r.final_sigmas[1].sigma_x,
            sigma2_p: r.final_sigmas[1].sigma_p,
        };
        ApdStatus::Ok
    })
}

/// Number of recorded moment samples, 0 for null.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apd_run_len(run: *const ApdRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.moments.len())
}

/// Copies one recorded series into `buf`, which must hold [`apd_run_len`] values.
///
/// # Safety
/// `run` must be a live handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn apd_run_copy_series(
    run: *const ApdRun,
    kind: ApdSeries,
    buf: *mut f64,
    len: usize,
) -> ApdStatus {
    guard(|| {
        let Some(run) = run.as_ref() else {
            return fail(ApdStatus::NullPointer, "null run");
        };
        if buf.is_null() {
            return fail(ApdStatus::NullPointer, "null buffer");
        }
        let m = &run.0.moments;
        let n = m.len();
        if len < n {
            return fail(ApdStatus::BufferTooSmall, format!("buffer holds {len} values, {n} needed"));
        }
        let s1 = OscillatorSeries::from_moments(m, 1);
        let s2 = OscillatorSeries::from_moments(m, 2);
        let values: Vec<f64> = match kind {
            ApdSeries::Time => m.times().to_vec(),
            ApdSeries::Sigma1X => s1.sigma_x(),
            ApdSeries::Sigma2X => s2.sigma_x(),
            ApdSeries::ESigma | ApdSeries::ENb => match apdsync::analysis::error_signals(&s1, &s2) {
                Ok(e) if kind == ApdSeries::ESigma => e.e_sigma,
                Ok(e) => e.e_nb,
                Err(e) => return fail(ApdStatus::NumericalError, e.to_string()),
            },
        };
        std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&values);
        ApdStatus::Ok
    })
}

/// Bose-Einstein occupation at angular frequency `omega_rad_s` and temperature `temperature_k`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apd_thermal_occupation(omega_rad_s: f64, temperature_k: f64, out: *mut f64) -> ApdStatus {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return fail(ApdStatus::NullPointer, "null output");
        };
        match thermal_occupation(&PhysicalConstants::CODATA, omega_rad_s, temperature_k) {
            Ok(n) => {
                *out = n;
                ApdStatus::Ok
            }
            Err(e) => fail(ApdStatus::ConfigError, e.to_string()),
        }
    })
}
