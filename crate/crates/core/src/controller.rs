//! Mean-field optomechanical controller and the drive signals it produces.
//!
//! The classical subsystem is a driven optomechanical cavity (`alpha_c`,
//! `beta_c`) whose output feeds two intermediary cavities (`alpha_1`,
//! `alpha_2`). The photon numbers `|alpha_j|^2` of the intermediary cavities
//! shift the frequencies of the two quantum oscillators.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{IntegrationError, IntegratorSettings, Trajectory};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("invalid controller configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Controller parameters. All values are angular frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Detuning of the controller cavity.
    pub delta_c: f64,
    /// Controller cavity decay rate.
    pub gamma_c: f64,
    /// Radiation-pressure coupling of the controller.
    pub g_c: f64,
    /// Mechanical damping of the controller resonator.
    pub mech_gamma_c: f64,
    /// Mechanical frequency of the controller resonator.
    pub omega_c: f64,
    /// Drive of the controller cavity.
    pub eps_c: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub eps_1: f64,
    pub eps_2: f64,
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let mut bad = Vec::new();
        let all = [
            ("delta_c", self.delta_c),
            ("gamma_c", self.gamma_c),
            ("g_c", self.g_c),
            ("mech_gamma_c", self.mech_gamma_c),
            ("omega_c", self.omega_c),
            ("eps_c", self.eps_c),
            ("delta_1", self.delta_1),
            ("delta_2", self.delta_2),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("eps_1", self.eps_1),
            ("eps_2", self.eps_2),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                bad.push(format!("{name} must be finite"));
            }
        }
        for (name, v) in [
            ("gamma_c", self.gamma_c),
            ("mech_gamma_c", self.mech_gamma_c),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("omega_c", self.omega_c),
        ] {
            if !(v > 0.0) {
                bad.push(format!("{name} > 0 violated ({v:e})"));
            }
        }
        for (name, v) in [("eps_c", self.eps_c), ("eps_1", self.eps_1), ("eps_2", self.eps_2)] {
            if !(v >= 0.0) {
                bad.push(format!("{name} >= 0 violated ({v:e})"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ControllerError::Config(bad.join("; ")))
        }
    }

    /// One mechanical period of the controller, in seconds.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_c
    }
}

/// Complex mean-field amplitudes of the classical subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerState {
    pub alpha_c: Complex64,
    pub beta_c: Complex64,
    pub alpha_1: Complex64,
    pub alpha_2: Complex64,
}

impl ControllerState {
    pub const DIM: usize = 4;

    pub fn to_vec(&self) -> Vec<Complex64> {
        vec![self.alpha_c, self.beta_c, self.alpha_1, self.alpha_2]
    }

    pub fn from_slice(y: &[Complex64]) -> Self {
        ControllerState {
            alpha_c: y[0],
            beta_c: y[1],
            alpha_1: y[2],
            alpha_2: y[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Time derivative of the controller amplitudes.
///
/// The cavity equations are driven in cascade by `-sqrt(gamma_j gamma_c) alpha_c`;
/// the resonators of the quantum branch have no back-action on this system.
pub fn controller_rhs(state: &ControllerState, p: &ControllerParams, _t: f64) -> ControllerState {
    let ControllerState {
        alpha_c,
        beta_c,
        alpha_1,
        alpha_2,
    } = *state;
    let x_c = beta_c + beta_c.conj();
    let d_alpha_c = -I * p.delta_c * alpha_c - alpha_c * (0.5 * p.gamma_c)
        - I * p.g_c * alpha_c * x_c
        + p.eps_c;
    let d_beta_c =
        Complex64::new(-0.5 * p.mech_gamma_c, -p.omega_c) * beta_c - I * (p.g_c * alpha_c.norm_sqr());
    let cavity = |delta: f64, gamma: f64, eps: f64, alpha: Complex64| {
        Complex64::new(-0.5 * gamma, -delta) * alpha - alpha_c * (gamma * p.gamma_c).sqrt() + eps
    };
    ControllerState {
        alpha_c: d_alpha_c,
        beta_c: d_beta_c,
        alpha_1: cavity(p.delta_1, p.gamma_1, p.eps_1, alpha_1),
        alpha_2: cavity(p.delta_2, p.gamma_2, p.eps_2, alpha_2),
    }
}

/// Integrates the controller from `initial` at t = 0 to `t_end`.
pub fn simulate_controller(
    p: &ControllerParams,
    initial: &ControllerState,
    t_end: f64,
    integ: &IntegratorSettings,
) -> Result<Trajectory, ControllerError> {
    p.validate()?;
    if !(t_end > 0.0) {
        return Err(ControllerError::Config(format!("t_end must be > 0, got {t_end:e}")));
    }
    if !initial.is_finite() {
        return Err(ControllerError::Config("initial controller state must be finite".into()));
    }
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let d = controller_rhs(&ControllerState::from_slice(y), p, t);
        dy[0] = d.alpha_c;
        dy[1] = d.beta_c;
        dy[2] = d.alpha_1;
        dy[3] = d.alpha_2;
    };
    Ok(integ.integrate(&rhs, &initial.to_vec(), 0.0, t_end)?)
}

/// Closed-form synthetic drive shapes, applied identically to both oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticDrive {
    Constant { level: f64 },
    /// `offset + amplitude * cos(omega * t)`.
    Sinusoid { offset: f64, amplitude: f64, omega: f64 },
}

/// Real, non-negative drive values `(s_1(t), s_2(t))`.
#[derive(Debug, Clone)]
pub enum DriveSignal {
    Synthetic(SyntheticDrive),
    /// Photon numbers `|alpha_1|^2`, `|alpha_2|^2` read from a controller run.
    Controller(Arc<Trajectory>),
}

impl DriveSignal {
    /// Drive pair at time `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64), IntegrationError> {
        match self {
            DriveSignal::Synthetic(s) => {
                let v = synthetic_value(s, t);
                Ok((v, v))
            }
            DriveSignal::Controller(traj) => {
                let a1 = traj.interpolate_component(t, 2)?;
                let a2 = traj.interpolate_component(t, 3)?;
                Ok((a1.norm_sqr(), a2.norm_sqr()))
            }
        }
    }

    /// Evaluation without a range check; `t` is clamped into the covered span.
    pub(crate) fn eval_clamped(&self, t: f64) -> (f64, f64) {
        match self {
            DriveSignal::Synthetic(s) => {
                let v = synthetic_value(s, t);
                (v, v)
            }
            DriveSignal::Controller(traj) => (
                traj.interpolate_component_clamped(t, 2).norm_sqr(),
                traj.interpolate_component_clamped(t, 3).norm_sqr(),
            ),
        }
    }

    /// Whether the drive is defined on `[t0, t1]`.
    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            DriveSignal::Synthetic(_) => true,
            DriveSignal::Controller(traj) => {
                !traj.is_empty() && traj.start() <= t0 && t1 <= traj.end()
            }
        }
    }

    pub fn controller_trajectory(&self) -> Option<&Arc<Trajectory>> {
        match self {
            DriveSignal::Controller(t) => Some(t),
            DriveSignal::Synthetic(_) => None,
        }
    }
}

fn synthetic_value(s: &SyntheticDrive, t: f64) -> f64 {
    match *s {
        SyntheticDrive::Constant { level } => level,
        SyntheticDrive::Sinusoid {
            offset,
            amplitude,
            omega,
        } => offset + amplitude * (omega * t).cos(),
    }
}

/// Wraps a controller trajectory as a drive signal.
pub fn drive_from_trajectory(traj: Arc<Trajectory>) -> Result<DriveSignal, ControllerError> {
    if traj.dim() != ControllerState::DIM {
        return Err(ControllerError::Config(format!(
            "controller trajectory must have {} components, got {}",
            ControllerState::DIM,
            traj.dim()
        )));
    }
    if traj.is_empty() {
        return Err(ControllerError::Config("controller trajectory is empty".into()));
    }
    Ok(DriveSignal::Controller(traj))
}

pub fn make_synthetic_drive(kind: SyntheticDrive) -> Result<DriveSignal, ControllerError> {
    match kind {
        SyntheticDrive::Constant { level } => {
            if !(level >= 0.0 && level.is_finite()) {
                return Err(ControllerError::Config(format!(
                    "constant drive level must be finite and >= 0, got {level}"
                )));
            }
        }
        SyntheticDrive::Sinusoid {
            offset,
            amplitude,
            omega,
        } => {
            if !(offset.is_finite() && amplitude.is_finite() && omega.is_finite()) {
                return Err(ControllerError::Config("sinusoid parameters must be finite".into()));
            }
            if !(amplitude >= 0.0 && offset >= amplitude) {
                return Err(ControllerError::Config(format!(
                    "sinusoid needs offset >= amplitude >= 0 to stay non-negative (offset {offset}, amplitude {amplitude})"
                )));
            }
        }
    }
    Ok(DriveSignal::Synthetic(kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::ToleranceSettings;

    fn fig4(delta_ratio: f64) -> ControllerParams {
        let oc = 2.0 * std::f64::consts::PI * 1e9;
        let o1 = 2.0 * std::f64::consts::PI * 1e7;
        ControllerParams {
            delta_c: delta_ratio * oc,
            gamma_c: oc,
            g_c: 1e-3 * oc,
            mech_gamma_c: 1e-3 * oc,
            omega_c: oc,
            eps_c: 418.0 * oc,
            delta_1: -2.0 * o1,
            delta_2: -2.0 * o1,
            gamma_1: o1,
            gamma_2: o1,
            eps_1: 0.0,
            eps_2: 0.0,
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_is_fixed_without_drive() {
        let mut p = fig4(-0.4);
        p.eps_c = 0.0;
        let d = controller_rhs(&ControllerState::default(), &p, 0.0);
        assert_eq!(d, ControllerState::default());
    }

    #[test]
    fn linear_fixed_point_without_coupling() {
        let mut p = fig4(-0.6);
        p.g_c = 0.0;
        let fixed = p.eps_c / c(0.5 * p.gamma_c, p.delta_c);
        let s = ControllerState {
            alpha_c: fixed,
            ..Default::default()
        };
        let d = controller_rhs(&s, &p, 0.0);
        assert!(d.alpha_c.norm() < 1e-9 * p.eps_c);
    }

    // Hand-expanded real/imaginary form of the same equations.
    fn rhs_expanded(s: &ControllerState, p: &ControllerParams) -> [f64; 8] {
        let (ar, ai) = (s.alpha_c.re, s.alpha_c.im);
        let (br, bi) = (s.beta_c.re, s.beta_c.im);
        let x = 2.0 * br;
        let n = ar * ar + ai * ai;
        let dar = p.delta_c * ai - 0.5 * p.gamma_c * ar + p.g_c * x * ai + p.eps_c;
        let dai = -p.delta_c * ar - 0.5 * p.gamma_c * ai - p.g_c * x * ar;
        let dbr = p.omega_c * bi - 0.5 * p.mech_gamma_c * br;
        let dbi = -p.omega_c * br - 0.5 * p.mech_gamma_c * bi - p.g_c * n;
        let cav = |d: f64, g: f64, e: f64, z: Complex64| {
            let k = (g * p.gamma_c).sqrt();
            (
                d * z.im - 0.5 * g * z.re - k * ar + e,
                -d * z.re - 0.5 * g * z.im - k * ai,
            )
        };
        let (d1r, d1i) = cav(p.delta_1, p.gamma_1, p.eps_1, s.alpha_1);
        let (d2r, d2i) = cav(p.delta_2, p.gamma_2, p.eps_2, s.alpha_2);
        [dar, dai, dbr, dbi, d1r, d1i, d2r, d2i]
    }

    #[test]
    fn rhs_matches_expanded_form_on_random_states() {
        // Small deterministic LCG so the test has no RNG dependency.
        let mut seed: u64 = 0x2545_f491_4f6c_dd1d;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut p = fig4(-0.95);
        p.eps_1 = 3.0e9;
        p.eps_2 = 1.0e8;
        p.gamma_2 = 2.0 * p.gamma_1;
        for _ in 0..200 {
            let s = ControllerState {
                alpha_c: c(800.0 * next(), 800.0 * next()),
                beta_c: c(3000.0 * next(), 3000.0 * next()),
                alpha_1: c(4000.0 * next(), 4000.0 * next()),
                alpha_2: c(4000.0 * next(), 4000.0 * next()),
            };
            let d = controller_rhs(&s, &p, 0.0);
            let got = [
                d.alpha_c.re, d.alpha_c.im, d.beta_c.re, d.beta_c.im, d.alpha_1.re, d.alpha_1.im,
                d.alpha_2.re, d.alpha_2.im,
            ];
            let want = rhs_expanded(&s, &p);
            let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() <= 1e-12 * scale, "{g} vs {w}");
            }
        }
    }

    fn fixed(p: &ControllerParams, record_every: usize) -> IntegratorSettings {
        IntegratorSettings::Fixed {
            dt: 1e-3 * p.period(),
            record_every,
        }
    }

    #[test]
    fn undriven_controller_stays_at_zero() {
        let mut p = fig4(-0.4);
        p.eps_c = 0.0;
        let tr = simulate_controller(&p, &ControllerState::default(), 5e-9, &fixed(&p, 10)).unwrap();
        assert!(tr.raw_states().iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn uncoupled_controller_relaxes_to_linear_fixed_point() {
        let mut p = fig4(-0.4);
        p.g_c = 0.0;
        // Amplitude transient decays as exp(-gamma_c t / 2).
        let t_end = 40.0 / p.gamma_c;
        let tol = ToleranceSettings {
            rtol: 1e-10,
            atol: 1e-12,
            dt_init: 1e-13,
            dt_min: 1e-20,
            dt_max: 1e-10,
        };
        let tr = simulate_controller(
            &p,
            &ControllerState::default(),
            t_end,
            &IntegratorSettings::Adaptive { tol, record_every: 1 },
        )
        .unwrap();
        let fixed = p.eps_c / c(0.5 * p.gamma_c, p.delta_c);
        let got = tr.last_state().unwrap()[0];
        assert!((got - fixed).norm() / fixed.norm() < 1e-6);
    }

    #[test]
    fn identical_branches_give_identical_drives() {
        let p = fig4(-0.95);
        let tr = simulate_controller(&p, &ControllerState::default(), 20e-9, &fixed(&p, 5)).unwrap();
        for k in 0..tr.len() {
            assert_eq!(tr.state(k)[2], tr.state(k)[3]);
        }
        let drive = drive_from_trajectory(Arc::new(tr)).unwrap();
        for i in 0..200 {
            let (s1, s2) = drive.eval(i as f64 * 0.1e-9).unwrap();
            assert_eq!(s1, s2);
            assert!(s1 >= 0.0);
        }
    }

    #[test]
    fn drive_modulus_arithmetic() {
        let mut tr = Trajectory::new(4);
        let a = c(3.0, 4.0);
        let z = c(0.0, 0.0);
        tr.push(0.0, &[z, z, a, z], &[z; 4]);
        tr.push(1.0, &[z, z, a, z], &[z; 4]);
        let d = drive_from_trajectory(Arc::new(tr)).unwrap();
        assert_eq!(d.eval(0.37).unwrap(), (25.0, 0.0));
        assert!(d.eval(1.5).is_err());
    }

    #[test]
    fn zero_trajectory_gives_zero_drive() {
        let mut tr = Trajectory::new(4);
        let z = [c(0.0, 0.0); 4];
        tr.push(0.0, &z, &z);
        tr.push(2.0, &z, &z);
        let d = drive_from_trajectory(Arc::new(tr)).unwrap();
        assert_eq!(d.eval(1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn synthetic_drives() {
        let d = make_synthetic_drive(SyntheticDrive::Constant { level: 0.0 }).unwrap();
        assert_eq!(d.eval(12.0).unwrap(), (0.0, 0.0));
        let w = 3.0;
        let d = make_synthetic_drive(SyntheticDrive::Sinusoid {
            offset: 2.0,
            amplitude: 1.0,
            omega: w,
        })
        .unwrap();
        for &t in &[0.0, 0.4, 1.7] {
            assert_eq!(d.eval(t).unwrap().0, 2.0 + (w * t).cos());
        }
        assert!(make_synthetic_drive(SyntheticDrive::Constant { level: -1.0 }).is_err());
        assert!(make_synthetic_drive(SyntheticDrive::Sinusoid {
            offset: 0.5,
            amplitude: 1.0,
            omega: 1.0
        })
        .is_err());
    }

    #[test]
    fn invalid_params_are_listed() {
        let mut p = fig4(-0.4);
        p.gamma_c = 0.0;
        p.eps_1 = -1.0;
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("gamma_c") && msg.contains("eps_1"), "{msg}");
    }
}
