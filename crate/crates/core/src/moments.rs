//! Second-order moments of two dissipative oscillators under a common drive.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::DriveSignal;
use crate::integrator::{IntegrationError, IntegratorSettings, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("unphysical frequency {0:e} rad/s (must be > 0)")]
    UnphysicalFrequency(f64),
    #[error("unphysical moments: {0}")]
    Unphysical(String),
    #[error("initial sigma_x {0} is below the vacuum value sqrt(1/2)")]
    BelowVacuum(f64),
    #[error("invalid oscillator parameters: {0}")]
    Params(String),
    #[error("drive signal does not cover [0, {t_end:e}] s")]
    DriveRange { t_end: f64 },
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Reduced Planck and Boltzmann constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
}

impl PhysicalConstants {
    /// SI defining values; `hbar` is `h / 2pi` with `h = 6.62607015e-34` J s.
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: 6.626_070_15e-34 / (2.0 * std::f64::consts::PI),
        k_b: 1.380_649e-23,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// One oscillator: frequency, damping and coupling in rad/s, bath temperature in K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub omega: f64,
    pub gamma: f64,
    /// Frequency shift per unit drive.
    pub g: f64,
    pub temperature: f64,
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<(), MomentError> {
        let mut bad = Vec::new();
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            bad.push(format!("omega > 0 violated ({:e})", self.omega));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            bad.push(format!("gamma > 0 violated ({:e})", self.gamma));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            bad.push(format!("g >= 0 violated ({:e})", self.g));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            bad.push(format!("temperature >= 0 violated ({})", self.temperature));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(MomentError::Params(bad.join("; ")))
        }
    }
}

/// `<b1+ b1>`, `<b2+ b2>`, `<b1+ b2>`, `<b1 b2>`, `<b1^2>`, `<b2^2>`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentState {
    pub n1: f64,
    pub n2: f64,
    pub c12: Complex64,
    pub a12: Complex64,
    pub sq1: Complex64,
    pub sq2: Complex64,
}

impl MomentState {
    pub const DIM: usize = 6;

    /// Packs into six complex slots; the occupations use real parts only.
    pub fn to_vec(&self) -> Vec<Complex64> {
        vec![
            Complex64::new(self.n1, 0.0),
            Complex64::new(self.n2, 0.0),
            self.c12,
            self.a12,
            self.sq1,
            self.sq2,
        ]
    }

    pub fn from_slice(y: &[Complex64]) -> Self {
        MomentState {
            n1: y[0].re,
            n2: y[1].re,
            c12: y[2],
            a12: y[3],
            sq1: y[4],
            sq2: y[5],
        }
    }

    /// Checks positivity and the Cauchy–Schwarz bounds on the correlations.
    pub fn check_physical(&self) -> Result<(), MomentError> {
        let mut bad = Vec::new();
        let vals = self.to_vec();
        if vals.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(MomentError::Unphysical("non-finite moment".into()));
        }
        if self.n1 < 0.0 {
            bad.push(format!("n1 = {} < 0", self.n1));
        }
        if self.n2 < 0.0 {
            bad.push(format!("n2 = {} < 0", self.n2));
        }
        let slack = 1e-12;
        for (name, sq, n) in [("sq1", self.sq1, self.n1), ("sq2", self.sq2, self.n2)] {
            let bound = (n.max(0.0) * (n.max(0.0) + 1.0)).sqrt();
            if sq.norm() > bound * (1.0 + slack) + slack {
                bad.push(format!("|{name}| = {} exceeds sqrt(n(n+1)) = {bound}", sq.norm()));
            }
        }
        let cs = self.n1.max(0.0) * self.n2.max(0.0);
        if self.c12.norm_sqr() > cs * (1.0 + slack) + slack {
            bad.push(format!("|c12|^2 = {} exceeds n1*n2 = {cs}", self.c12.norm_sqr()));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(MomentError::Unphysical(bad.join("; ")))
        }
    }
}

/// Quadrature standard deviations of `x = (b + b+)/sqrt2`, `p = -i(b - b+)/sqrt2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPair {
    pub sigma_x: f64,
    pub sigma_p: f64,
}

/// Modified frequency `omega + g * s`.
pub fn effective_frequency(p: &OscillatorParams, s: f64) -> Result<f64, MomentError> {
    let w = p.omega + p.g * s;
    if w > 0.0 && w.is_finite() {
        Ok(w)
    } else {
        Err(MomentError::UnphysicalFrequency(w))
    }
}

/// Bose–Einstein occupation `1 / (exp(hbar w / kB T) - 1)`; zero at T = 0.
pub fn thermal_occupation(
    consts: &PhysicalConstants,
    omega_prime: f64,
    temperature: f64,
) -> Result<f64, MomentError> {
    if !(omega_prime > 0.0) {
        return Err(MomentError::UnphysicalFrequency(omega_prime));
    }
    if !(temperature >= 0.0) {
        return Err(MomentError::Params(format!("temperature {temperature} < 0")));
    }
    Ok(occupation_unchecked(consts, omega_prime, temperature))
}

#[inline]
fn occupation_unchecked(consts: &PhysicalConstants, omega_prime: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    // expm1 overflows to +inf for large arguments, giving exactly zero.
    1.0 / (consts.hbar * omega_prime / (consts.k_b * temperature)).exp_m1()
}

/// Time derivative of the moments for given effective frequencies and bath occupations.
pub fn moments_rhs(
    m: &MomentState,
    omega1: f64,
    omega2: f64,
    p1: &OscillatorParams,
    p2: &OscillatorParams,
    nth1: f64,
    nth2: f64,
) -> MomentState {
    let half_sum = 0.5 * (p1.gamma + p2.gamma);
    MomentState {
        n1: -p1.gamma * m.n1 + p1.gamma * nth1,
        n2: -p2.gamma * m.n2 + p2.gamma * nth2,
        // -i(-w1 + w2) c12 - (G1+G2)/2 c12
        c12: Complex64::new(-half_sum, omega1 - omega2) * m.c12,
        a12: Complex64::new(-half_sum, -(omega1 + omega2)) * m.a12,
        sq1: Complex64::new(-p1.gamma, -2.0 * omega1) * m.sq1,
        sq2: Complex64::new(-p2.gamma, -2.0 * omega2) * m.sq2,
    }
}

/// Integrates the moments from t = 0 to `t_end` under `drive`.
///
/// The bath occupations follow the instantaneous modified frequencies.
pub fn simulate_moments(
    m0: &MomentState,
    drive: &DriveSignal,
    p1: &OscillatorParams,
    p2: &OscillatorParams,
    t_end: f64,
    integ: &IntegratorSettings,
) -> Result<Trajectory, MomentError> {
    simulate_moments_with(m0, drive, p1, p2, t_end, integ, &PhysicalConstants::CODATA)
}

pub fn simulate_moments_with(
    m0: &MomentState,
    drive: &DriveSignal,
    p1: &OscillatorParams,
    p2: &OscillatorParams,
    t_end: f64,
    integ: &IntegratorSettings,
    consts: &PhysicalConstants,
) -> Result<Trajectory, MomentError> {
    p1.validate()?;
    p2.validate()?;
    m0.check_physical()?;
    if !drive.covers(0.0, t_end) {
        return Err(MomentError::DriveRange { t_end });
    }
    // Effective frequencies stay positive for g, s >= 0, which both inputs guarantee.
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let (s1, s2) = drive.eval_clamped(t);
        let w1 = p1.omega + p1.g * s1;
        let w2 = p2.omega + p2.g * s2;
        let nth1 = occupation_unchecked(consts, w1, p1.temperature);
        let nth2 = occupation_unchecked(consts, w2, p2.temperature);
        let d = moments_rhs(&MomentState::from_slice(y), w1, w2, p1, p2, nth1, nth2);
        dy[0] = Complex64::new(d.n1, 0.0);
        dy[1] = Complex64::new(d.n2, 0.0);
        dy[2] = d.c12;
        dy[3] = d.a12;
        dy[4] = d.sq1;
        dy[5] = d.sq2;
    };
    Ok(integ.integrate(&rhs, &m0.to_vec(), 0.0, t_end)?)
}

fn sigma_single(n: f64, sq: Complex64) -> Result<SigmaPair, MomentError> {
    let rx = 0.5 + n + sq.re;
    let rp = 0.5 + n - sq.re;
    if !(rx >= 0.0 && rp >= 0.0) {
        return Err(MomentError::Unphysical(format!(
            "negative quadrature variance (n = {n}, Re<b^2> = {})",
            sq.re
        )));
    }
    Ok(SigmaPair {
        sigma_x: rx.sqrt(),
        sigma_p: rp.sqrt(),
    })
}

/// Quadrature standard deviations of both oscillators.
pub fn std_devs(m: &MomentState) -> Result<(SigmaPair, SigmaPair), MomentError> {
    Ok((sigma_single(m.n1, m.sq1)?, sigma_single(m.n2, m.sq2)?))
}

/// Variance of `x` above the vacuum level, `sigma_x^2 - 1/2 = n + Re<b^2>`.
///
/// Unlike `sigma_x` itself this keeps full relative precision when the
/// occupation is many orders of magnitude below one.
pub fn excess_variance_x(n: f64, sq: Complex64) -> f64 {
    n + sq.re
}

/// Single-oscillator moments `(n, <b^2>)` for a given initial `sigma_x`,
/// with no squeezing.
pub fn init_from_sigma(sigma_x0: f64) -> Result<(f64, Complex64), MomentError> {
    if !(sigma_x0 >= std::f64::consts::FRAC_1_SQRT_2) || !sigma_x0.is_finite() {
        return Err(MomentError::BelowVacuum(sigma_x0));
    }
    let n = (sigma_x0 * sigma_x0 - 0.5).max(0.0);
    Ok((n, Complex64::new(0.0, 0.0)))
}

/// Uncorrelated initial state with the given `sigma_x` for each oscillator.
pub fn initial_state(sigma1_x: f64, sigma2_x: f64) -> Result<MomentState, MomentError> {
    let (n1, sq1) = init_from_sigma(sigma1_x)?;
    let (n2, sq2) = init_from_sigma(sigma2_x)?;
    Ok(MomentState {
        n1,
        n2,
        sq1,
        sq2,
        ..Default::default()
    })
}
