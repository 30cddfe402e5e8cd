//! CSV emission with 17 significant digits and LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::IoError;
use crate::analysis::{Embedding, OscillatorSeries, Regime};
use crate::integrator::Trajectory;
use crate::moments::{std_devs, MomentState};
use crate::sweep::{CellOutcome, GridResult, SweepAxes};

pub const TIMESERIES_HEADER: &str = "t_s,sigma1_x,sigma1_p,sigma2_x,sigma2_p,e_sigma,e_nb,re_sq1,im_sq1,re_sq2,im_sq2,s1,s2,re_alpha_c,im_alpha_c,re_beta_c,im_beta_c";
pub const GRID_HEADER: &str = "delta_gamma,delta_g,e_avg,t_sync_s,regime,status";
pub const REGIMES_HEADER: &str = "delta_c_over_omega_c,e_avg,t_sync_s,regime,lyapunov_per_s,status";

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".into()
    }
}

fn push_row(out: &mut String, vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::at(dir, e))?;
    }
    fs::write(path, text).map_err(|e| IoError::at(path, e))
}

/// Time series text for every `every`-th moment node (the last node is always
/// included). Controller values are interpolated onto the moment grid.
pub fn timeseries_csv(controller: &Trajectory, moments: &Trajectory, every: usize) -> Result<String, IoError> {
    let every = every.max(1);
    let len = moments.len();
    let mut rows: Vec<usize> = (0..len).step_by(every).collect();
    if len > 0 && rows.last() != Some(&(len - 1)) {
        rows.push(len - 1);
    }
    let s1 = OscillatorSeries::from_moments(moments, 1);
    let s2 = OscillatorSeries::from_moments(moments, 2);
    let err = crate::analysis::error_signals(&s1, &s2).map_err(|e| IoError::Data(e.to_string()))?;
    let mut out = String::with_capacity(rows.len() * 18 * 24 + TIMESERIES_HEADER.len() + 1);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for k in rows {
        let t = moments.times()[k];
        let m = MomentState::from_slice(moments.state(k));
        let (p1, p2) = std_devs(&m).map_err(|e| IoError::Data(format!("t = {t:e} s: {e}")))?;
        let c = crate::integrator::interpolate(controller, t).map_err(|e| IoError::Data(e.to_string()))?;
        push_row(
            &mut out,
            &[
                t,
                p1.sigma_x,
                p1.sigma_p,
                p2.sigma_x,
                p2.sigma_p,
                err.e_sigma[k],
                err.e_nb[k],
                m.sq1.re,
                m.sq1.im,
                m.sq2.re,
                m.sq2.im,
                c[2].norm_sqr(),
                c[3].norm_sqr(),
                c[0].re,
                c[0].im,
                c[1].re,
                c[1].im,
            ],
        );
    }
    Ok(out)
}

pub fn write_timeseries_csv(
    path: &Path,
    controller: &Trajectory,
    moments: &Trajectory,
    every: usize,
) -> Result<(), IoError> {
    write(path, &timeseries_csv(controller, moments, every)?)
}

fn check_complete(grid: &GridResult) -> Result<(), IoError> {
    let n = grid.axes.len();
    let ordered = grid.cells.len() == n && grid.cells.iter().enumerate().all(|(i, c)| c.index == i);
    if ordered {
        Ok(())
    } else {
        Err(IoError::Data(format!(
            "grid is incomplete: {} of {n} cells in index order",
            grid.cells.len()
        )))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_f64)
}

/// Mismatch grid text, one row per cell in index order.
pub fn grid_csv(grid: &GridResult) -> Result<String, IoError> {
    if !matches!(grid.axes, SweepAxes::Mismatch { .. }) {
        return Err(IoError::Data("grid CSV needs mismatch axes".into()));
    }
    check_complete(grid)?;
    let mut out = String::new();
    out.push_str(GRID_HEADER);
    out.push('\n');
    for cell in &grid.cells {
        let (dg, dgg) = (cell.coords[0], cell.coords[1]);
        match &cell.outcome {
            CellOutcome::Ok { report } => writeln!(
                out,
                "{},{},{},{},{},ok",
                fmt_f64(dg),
                fmt_f64(dgg),
                fmt_f64(report.e_avg),
                opt(report.t_sync),
                report.regime
            ),
            CellOutcome::Failed { .. } => writeln!(
                out,
                "{},{},nan,nan,{},failed",
                fmt_f64(dg),
                fmt_f64(dgg),
                Regime::Undetermined
            ),
        }
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn write_grid_csv(path: &Path, grid: &GridResult) -> Result<(), IoError> {
    write(path, &grid_csv(grid)?)
}

/// Detuning sweep text, one row per detuning.
pub fn regimes_csv(grid: &GridResult) -> Result<String, IoError> {
    if !matches!(grid.axes, SweepAxes::Detuning { .. }) {
        return Err(IoError::Data("regime CSV needs a detuning axis".into()));
    }
    check_complete(grid)?;
    let mut out = String::new();
    out.push_str(REGIMES_HEADER);
    out.push('\n');
    for cell in &grid.cells {
        let d = fmt_f64(cell.coords[0]);
        match &cell.outcome {
            CellOutcome::Ok { report } => writeln!(
                out,
                "{d},{},{},{},{},ok",
                fmt_f64(report.e_avg),
                opt(report.t_sync),
                report.regime,
                opt(report.regime.lyapunov_estimate)
            ),
            CellOutcome::Failed { .. } => writeln!(out, "{d},nan,nan,{},nan,failed", Regime::Undetermined),
        }
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn write_regimes_csv(path: &Path, grid: &GridResult) -> Result<(), IoError> {
    write(path, &regimes_csv(grid)?)
}

/// Embedded points with columns `x0, x1, ...`.
pub fn embedding_csv(emb: &Embedding) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..emb.dim).map(|d| format!("x{d}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for p in emb.points() {
        push_row(&mut out, p);
    }
    out
}

pub fn write_embedding_csv(path: &Path, emb: &Embedding) -> Result<(), IoError> {
    write(path, &embedding_csv(emb))
}

/// Parses numeric CSV text back into a header and rows.
pub fn read_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| IoError::Data("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Data(format!("row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(IoError::Data(format!("row {} has {} fields", i + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
