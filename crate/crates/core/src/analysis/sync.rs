//! Synchronization error signals, closed-form error solutions and summary metrics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::integrator::Trajectory;

/// Per-oscillator moment series on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSeries {
    pub times: Vec<f64>,
    pub n: Vec<f64>,
    pub sq: Vec<Complex64>,
}

impl OscillatorSeries {
    /// Extracts oscillator `which` (1 or 2) from a moment trajectory.
    pub fn from_moments(traj: &Trajectory, which: usize) -> Self {
        assert!(which == 1 || which == 2, "oscillator index must be 1 or 2");
        let (ni, si) = if which == 1 { (0, 4) } else { (1, 5) };
        let len = traj.len();
        let mut n = Vec::with_capacity(len);
        let mut sq = Vec::with_capacity(len);
        for k in 0..len {
            let y = traj.state(k);
            n.push(y[ni].re);
            sq.push(y[si]);
        }
        OscillatorSeries {
            times: traj.times().to_vec(),
            n,
            sq,
        }
    }

    pub fn sigma_x(&self) -> Vec<f64> {
        self.n
            .iter()
            .zip(&self.sq)
            .map(|(n, s)| (0.5 + n + s.re).max(0.0).sqrt())
            .collect()
    }
}

/// Pointwise differences between two oscillators.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    /// `<b1+ b1> - <b2+ b2>`
    pub e_nb: Vec<f64>,
    /// `<b1^2> - <b2^2>`
    pub e_b2: Vec<Complex64>,
    /// `sigma_1x - sigma_2x`
    pub e_sigma: Vec<f64>,
}

/// Differences of occupation, squeezing moment and `sigma_x`.
///
/// `e_sigma` is evaluated as `(sigma_1x^2 - sigma_2x^2) / (sigma_1x + sigma_2x)`,
/// which avoids cancellation when both deviations sit at the vacuum level.
pub fn error_signals(
    a: &OscillatorSeries,
    b: &OscillatorSeries,
) -> Result<ErrorSeries, AnalysisError> {
    if a.times != b.times {
        return Err(AnalysisError::Alignment(format!(
            "time grids differ ({} vs {} samples)",
            a.times.len(),
            b.times.len()
        )));
    }
    let len = a.times.len();
    let mut e_nb = Vec::with_capacity(len);
    let mut e_b2 = Vec::with_capacity(len);
    let mut e_sigma = Vec::with_capacity(len);
    for k in 0..len {
        let dn = a.n[k] - b.n[k];
        let dsq = a.sq[k] - b.sq[k];
        let s1 = (0.5 + a.n[k] + a.sq[k].re).max(0.0).sqrt();
        let s2 = (0.5 + b.n[k] + b.sq[k].re).max(0.0).sqrt();
        let denom = s1 + s2;
        let es = if denom > 0.0 { (dn + dsq.re) / denom } else { 0.0 };
        if !(dn.is_finite() && es.is_finite() && dsq.re.is_finite() && dsq.im.is_finite()) {
            return Err(AnalysisError::NonFinite(a.times[k]));
        }
        e_nb.push(dn);
        e_b2.push(dsq);
        e_sigma.push(es);
    }
    Ok(ErrorSeries {
        times: a.times.clone(),
        e_nb,
        e_b2,
        e_sigma,
    })
}

/// Occupation difference of identical oscillators: `e0 * exp(-gamma t)`.
pub fn analytic_error_nb(e0: f64, gamma: f64, t: f64) -> f64 {
    e0 * (-gamma * t).exp()
}

/// Squeezing difference of identical oscillators:
/// `e0 * exp(-gamma t) * exp(-i phase_integral)`, where
/// `phase_integral = integral_0^t 2 omega'(t') dt'`.
pub fn analytic_error_b2(e0: Complex64, gamma: f64, phase_integral: f64, t: f64) -> Complex64 {
    e0 * (-gamma * t).exp() * Complex64::new(0.0, -phase_integral).exp()
}

/// Which integrand the average synchronization error uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// `|integral(sigma_1x - sigma_2x)| / integral(sigma_1x)`.
    #[default]
    Signed,
    /// `integral |sigma_1x - sigma_2x| / integral(sigma_1x)`.
    Absolute,
}

/// Trapezoidal integral of `f` over `[t0, end]`, linearly interpolating the
/// integrand at `t0` when it falls between samples.
pub fn trapezoid_from(times: &[f64], f: &[f64], t0: f64) -> f64 {
    let k = times.partition_point(|&t| t < t0);
    let mut acc = 0.0;
    if k > 0 && k < times.len() {
        let (ta, tb) = (times[k - 1], times[k]);
        let w = (t0 - ta) / (tb - ta);
        let f0 = f[k - 1] + w * (f[k] - f[k - 1]);
        acc += 0.5 * (f0 + f[k]) * (tb - t0);
    }
    for j in k.max(1)..times.len() {
        if times[j - 1] >= t0 {
            acc += 0.5 * (f[j - 1] + f[j]) * (times[j] - times[j - 1]);
        }
    }
    acc
}

/// Average synchronization error over `[t0, t_end]`.
pub fn avg_sync_error(
    times: &[f64],
    e_sigma: &[f64],
    sigma1x: &[f64],
    t0: f64,
    integrand: Integrand,
) -> Result<f64, AnalysisError> {
    if times.len() != e_sigma.len() || times.len() != sigma1x.len() {
        return Err(AnalysisError::Alignment("series lengths differ".into()));
    }
    let end = times.last().copied().unwrap_or(f64::NEG_INFINITY);
    if times.is_empty() || !(t0 < end) {
        return Err(AnalysisError::Range(format!(
            "t0 = {t0:e} s is not before the series end {end:e} s"
        )));
    }
    let num = match integrand {
        Integrand::Signed => trapezoid_from(times, e_sigma, t0).abs(),
        Integrand::Absolute => {
            let abs: Vec<f64> = e_sigma.iter().map(|e| e.abs()).collect();
            trapezoid_from(times, &abs, t0)
        }
    };
    let den = trapezoid_from(times, sigma1x, t0);
    if !(den > 0.0) {
        return Err(AnalysisError::Range("integral of sigma_1x is not positive".into()));
    }
    Ok(num / den)
}

/// Earliest time after which `|e_sigma| / sigma_1x < rel_threshold` holds for
/// the rest of the series, or `None` if the final sample is not synchronized.
pub fn sync_time(times: &[f64], e_sigma: &[f64], sigma1x: &[f64], rel_threshold: f64) -> Option<f64> {
    let n = times.len().min(e_sigma.len()).min(sigma1x.len());
    if n == 0 {
        return None;
    }
    let ok = |k: usize| (e_sigma[k] / sigma1x[k]).abs() < rel_threshold;
    let mut first = n;
    for k in (0..n).rev() {
        if ok(k) {
            first = k;
        } else {
            break;
        }
    }
    (first < n).then(|| times[first])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: &[f64], n: &[f64]) -> OscillatorSeries {
        OscillatorSeries {
            times: times.to_vec(),
            n: n.to_vec(),
            sq: vec![Complex64::new(0.0, 0.0); n.len()],
        }
    }

    #[test]
    fn identical_series_have_zero_error() {
        let t = [0.0, 1.0, 2.0];
        let a = series(&t, &[1.0, 2.0, 3.0]);
        let e = error_signals(&a, &a).unwrap();
        assert!(e.e_nb.iter().chain(&e.e_sigma).all(|v| *v == 0.0));
    }

    #[test]
    fn constant_offset_gives_constant_error() {
        let t = [0.0, 1.0, 2.0];
        let a = series(&t, &[1.0, 2.0, 3.0]);
        let b = series(&t, &[0.5, 1.5, 2.5]);
        let e = error_signals(&a, &b).unwrap();
        assert!(e.e_nb.iter().all(|v| *v == 0.5));
    }

    #[test]
    fn sigma_error_matches_direct_difference() {
        let t = [0.0];
        let a = series(&t, &[1.0]);
        let b = series(&t, &[10.0]);
        let e = error_signals(&a, &b).unwrap();
        assert_eq!(e.e_nb[0], -9.0);
        let direct = 1.5f64.sqrt() - 10.5f64.sqrt();
        assert!((e.e_sigma[0] - direct).abs() < 1e-15);
    }

    #[test]
    fn misaligned_grids_rejected() {
        let a = series(&[0.0, 1.0], &[1.0, 1.0]);
        let b = series(&[0.0, 1.5], &[1.0, 1.0]);
        assert!(matches!(error_signals(&a, &b), Err(AnalysisError::Alignment(_))));
    }

    #[test]
    fn analytic_errors() {
        assert_eq!(analytic_error_nb(-9.0, 3.0, 0.0), -9.0);
        let g = 2.0;
        assert!((analytic_error_nb(4.0, g, std::f64::consts::LN_2 / g) - 2.0).abs() < 1e-15);
        let e0 = Complex64::new(0.3, -0.1);
        assert_eq!(analytic_error_b2(e0, 1.0, 0.0, 0.0), e0);
        for phase in [0.0, 1.0, 17.3, -5.0] {
            let v = analytic_error_b2(e0, 1.5, phase, 0.7);
            assert!((v.norm() - e0.norm() * (-1.05f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn avg_error_examples() {
        let times: Vec<f64> = (0..101).map(|k| k as f64 * 0.01).collect();
        let s1 = vec![2.0; times.len()];
        let zero = vec![0.0; times.len()];
        assert_eq!(avg_sync_error(&times, &zero, &s1, 0.0, Integrand::Signed).unwrap(), 0.0);
        // sigma_2x = 0 makes e = sigma_1x.
        let e = avg_sync_error(&times, &s1, &s1, 0.3, Integrand::Signed).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
        assert!(avg_sync_error(&times, &s1, &s1, 1.0, Integrand::Signed).is_err());
        assert!(avg_sync_error(&times, &s1, &s1, 2.0, Integrand::Signed).is_err());
    }

    #[test]
    fn signed_and_absolute_integrands_differ_for_oscillating_error() {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.005).collect();
        let e: Vec<f64> = times.iter().map(|t| (std::f64::consts::TAU * t).sin()).collect();
        let s1 = vec![1.0; times.len()];
        let signed = avg_sync_error(&times, &e, &s1, 0.0, Integrand::Signed).unwrap();
        let abs = avg_sync_error(&times, &e, &s1, 0.0, Integrand::Absolute).unwrap();
        assert!(signed < 1e-6);
        assert!((abs - 2.0 / std::f64::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn partial_interval_integration() {
        let times = [0.0, 1.0, 2.0];
        let f = [0.0, 1.0, 2.0];
        // integral of t over [0.5, 2] = 1.875
        assert!((trapezoid_from(&times, &f, 0.5) - 1.875).abs() < 1e-15);
        assert!((trapezoid_from(&times, &f, 0.0) - 2.0).abs() < 1e-15);
        assert!((trapezoid_from(&times, &f, 1.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn sync_time_examples() {
        let times: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
        let s1 = vec![1.0; times.len()];
        let zero = vec![0.0; times.len()];
        assert_eq!(sync_time(&times, &zero, &s1, 1e-3), Some(0.0));

        let (e0, g, thr) = (2.0, 1.3, 1e-3);
        let e: Vec<f64> = times.iter().map(|t| e0 * (-g * t).exp()).collect();
        let want = (e0 / thr).ln() / g;
        let got = sync_time(&times, &e, &s1, thr).unwrap();
        assert!((got - want).abs() <= 0.01, "{got} vs {want}");

        let grow: Vec<f64> = times.iter().map(|t| 1e-6 * t.exp()).collect();
        assert_eq!(sync_time(&times, &grow, &s1, 1e-3), None);
    }
}
