//! With zero optomechanical coupling the controller equations are linear and
//! have an exact solution through the matrix exponential of the augmented
//! system `d/dt [y; 1] = [[A, b], [0, 0]] [y; 1]`.

use std::f64::consts::PI;

use apdsync::controller::{simulate_controller, ControllerParams, ControllerState};
use apdsync::integrator::{IntegratorSettings, ToleranceSettings};
use num_complex::Complex64;

type C = Complex64;
type Mat = [[C; 5]; 5];

const GHZ: f64 = 2.0 * PI * 1e9;

fn zero() -> Mat {
    [[C::new(0.0, 0.0); 5]; 5]
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut out = zero();
    for i in 0..5 {
        for j in 0..5 {
            out[i][j] = (0..5).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn norm1(a: &Mat) -> f64 {
    (0..5).map(|j| (0..5).map(|i| a[i][j].norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn expm(a: &Mat) -> Mat {
    let s = norm1(a).max(1.0).log2().ceil() as i32 + 4;
    let scale = 0.5f64.powi(s);
    let mut x = zero();
    for i in 0..5 {
        for j in 0..5 {
            x[i][j] = a[i][j] * scale;
        }
    }
    let mut sum = zero();
    let mut term = zero();
    for i in 0..5 {
        sum[i][i] = C::new(1.0, 0.0);
        term[i][i] = C::new(1.0, 0.0);
    }
    for k in 1..30 {
        term = matmul(&term, &x);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = matmul(&sum, &sum);
    }
    sum
}

fn generator(p: &ControllerParams) -> Mat {
    let i = C::new(0.0, 1.0);
    let mut m = zero();
    m[0][0] = -i * p.delta_c - p.gamma_c / 2.0;
    m[0][4] = C::new(p.eps_c, 0.0);
    m[1][1] = -i * p.omega_c - p.mech_gamma_c / 2.0;
    m[2][2] = -i * p.delta_1 - p.gamma_1 / 2.0;
    m[2][0] = C::new(-(p.gamma_1 * p.gamma_c).sqrt(), 0.0);
    m[2][4] = C::new(p.eps_1, 0.0);
    m[3][3] = -i * p.delta_2 - p.gamma_2 / 2.0;
    m[3][0] = C::new(-(p.gamma_2 * p.gamma_c).sqrt(), 0.0);
    m[3][4] = C::new(p.eps_2, 0.0);
    m
}

fn exact(p: &ControllerParams, y0: &ControllerState, t: f64) -> [C; 4] {
    let mut m = generator(p);
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v *= t;
        }
    }
    let e = expm(&m);
    let v = [y0.alpha_c, y0.beta_c, y0.alpha_1, y0.alpha_2, C::new(1.0, 0.0)];
    let mut out = [C::new(0.0, 0.0); 4];
    for (r, o) in out.iter_mut().enumerate() {
        *o = (0..5).map(|k| e[r][k] * v[k]).sum();
    }
    out
}

fn params() -> ControllerParams {
    ControllerParams {
        delta_c: -0.6 * GHZ,
        gamma_c: GHZ,
        g_c: 0.0,
        mech_gamma_c: 1e-3 * GHZ,
        omega_c: GHZ,
        eps_c: 418.0 * GHZ,
        delta_1: -0.02 * GHZ,
        delta_2: 0.03 * GHZ,
        gamma_1: 0.01 * GHZ,
        gamma_2: 0.02 * GHZ,
        eps_1: 0.5 * GHZ,
        eps_2: 0.0,
    }
}

fn init() -> ControllerState {
    ControllerState {
        alpha_c: C::new(10.0, -4.0),
        beta_c: C::new(3.0, 1.0),
        alpha_1: C::new(-2.0, 0.5),
        alpha_2: C::new(0.0, 7.0),
    }
}

fn check(integ: &IntegratorSettings, t_end: f64, tol: f64) {
    let p = params();
    let y0 = init();
    let tr = simulate_controller(&p, &y0, t_end, integ).unwrap();
    let stride = (tr.len() / 40).max(1);
    for k in (0..tr.len()).step_by(stride).chain([tr.len() - 1]) {
        let t = tr.times()[k];
        let want = exact(&p, &y0, t);
        for (c, (got, w)) in tr.state(k).iter().zip(want.iter()).enumerate() {
            let err = (got - w).norm() / w.norm();
            assert!(err < tol, "component {c} at t = {t:e}: {got} vs {w} (rel {err:e})");
        }
    }
}

#[test]
fn adaptive_matches_matrix_exponential() {
    let tol = ToleranceSettings {
        rtol: 1e-12,
        atol: 1e-12,
        dt_init: 1e-15,
        dt_min: 1e-20,
        dt_max: 1e-11,
    };
    check(
        &IntegratorSettings::Adaptive {
            tol,
            record_every: 1,
        },
        20e-9,
        1e-8,
    );
}

#[test]
fn fixed_step_matches_matrix_exponential() {
    check(
        &IntegratorSettings::Fixed {
            dt: 1e-12,
            record_every: 10,
        },
        20e-9,
        1e-8,
    );
}

#[test]
fn steady_state_is_reached() {
    let p = params();
    let t = 60.0 / p.gamma_1;
    let y = exact(&p, &init(), t);
    let i = C::new(0.0, 1.0);
    let a_c = p.eps_c / (i * p.delta_c + p.gamma_c / 2.0);
    assert!((y[0] - a_c).norm() / a_c.norm() < 1e-10);
    let a_1 = (p.eps_1 - (p.gamma_1 * p.gamma_c).sqrt() * a_c) / (i * p.delta_1 + p.gamma_1 / 2.0);
    assert!((y[2] - a_1).norm() / a_1.norm() < 1e-10);
}
