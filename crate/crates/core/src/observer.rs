//! Seven-state extended observer of the tracking error with an optional
//! resonant pair. Setting `omega_r_hat = 0` turns the resonant pair into a
//! plain integrator chain, which is the GPIO.
//!
//! Extended state: `z = [e, e', e'', e''', F, F', F'']`.

use nalgebra::{RowSVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Scalar;

pub type Vector7 = SVector<f64, 7>;
pub type Matrix7 = SMatrix<f64, 7, 7>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    Reso,
    Gpio,
}

/// Extended-state vector; a thin alias kept for readability at call sites.
pub type ExtendedState = Vector7;

/// `A_bar` as nested rows, generic so that exact and float builds share the layout.
pub fn abar_rows<T: Scalar>(k: &[T; 4], w2: &T) -> Vec<Vec<T>> {
    let mut a = vec![vec![T::int(0); 7]; 7];
    for i in 0..6 {
        a[i][i + 1] = T::int(1);
    }
    for j in 0..4 {
        a[3][j] = -k[j].clone();
    }
    a[6][5] = -w2.clone();
    a
}

/// `H = A_bar - l c` with `c = e1^T`.
pub fn h_rows<T: Scalar>(k: &[T; 4], l: &[T; 7], w2: &T) -> Vec<Vec<T>> {
    let mut h = abar_rows(k, w2);
    for i in 0..7 {
        h[i][0] = h[i][0].clone() - l[i].clone();
    }
    h
}

pub fn to_matrix(rows: &[Vec<f64>]) -> Matrix7 {
    Matrix7::from_fn(|i, j| rows[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverMatrices {
    pub abar: Matrix7,
    /// `b0_hat e4`.
    pub b0_vec: Vector7,
    /// Disturbance input direction `e5`.
    pub h: Vector7,
    /// Output row `e1^T`.
    pub c: RowSVector<f64, 7>,
    pub l: Vector7,
    pub k: [f64; 4],
    pub omega_r_hat: f64,
    pub b0_hat: f64,
}

pub fn build_abar(k: &[f64; 4], omega_r_hat: f64) -> Result<ObserverMatrices> {
    for (i, &ki) in k.iter().enumerate() {
        if !(ki.is_finite() && ki > 0.0) {
            return Err(Error::InvalidParameter {
                name: "controller gain",
                reason: format!("k{i} = {ki} must be finite and > 0"),
            });
        }
    }
    if !(omega_r_hat.is_finite() && omega_r_hat >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_r_hat",
            reason: format!("{omega_r_hat} must be finite and >= 0"),
        });
    }
    let w2 = omega_r_hat * omega_r_hat;
    Ok(ObserverMatrices {
        abar: to_matrix(&abar_rows(k, &w2)),
        b0_vec: Vector7::from_fn(|i, _| if i == 3 { 1.0 } else { 0.0 }),
        h: Vector7::from_fn(|i, _| if i == 4 { 1.0 } else { 0.0 }),
        c: RowSVector::<f64, 7>::from_fn(|_, j| if j == 0 { 1.0 } else { 0.0 }),
        l: Vector7::zeros(),
        k: *k,
        omega_r_hat,
        b0_hat: 1.0,
    })
}

impl ObserverMatrices {
    pub fn with_gains(mut self, l: &[f64; 7]) -> Result<Self> {
        if let Some((i, &v)) = l.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InfeasibleTuning { index: i + 1, value: v });
        }
        self.l = Vector7::from_column_slice(l);
        Ok(self)
    }

    pub fn with_b0_hat(mut self, b0_hat: f64) -> Result<Self> {
        if !(b0_hat.is_finite() && b0_hat != 0.0) {
            return Err(Error::InvalidParameter {
                name: "b0_hat",
                reason: format!("{b0_hat} must be finite and nonzero"),
            });
        }
        self.b0_vec = Vector7::from_fn(|i, _| if i == 3 { b0_hat } else { 0.0 });
        self.b0_hat = b0_hat;
        Ok(self)
    }

    /// `A_bar - l c`.
    pub fn error_matrix(&self) -> Matrix7 {
        self.abar - self.l * self.c
    }

    /// Observability stack `[c; c A; ...; c A^6]`.
    pub fn observability(&self) -> Matrix7 {
        let mut rows = [self.c; 7];
        for i in 1..7 {
            rows[i] = rows[i - 1] * self.abar;
        }
        Matrix7::from_rows(&rows)
    }
}

/// Observer right-hand side.
///
/// `u` is the applied (saturated) duty and `u0 = k0 e` the controller's
/// stabilising term. The fourth row is forced by `-(b0_hat u - u0)`, which in
/// closed loop without saturation equals `-z5_hat`; both quantities carry the
/// units of `e''''`.
pub fn reso_derivative(m: &ObserverMatrices, z: &Vector7, u: f64, u0: f64, e_meas: f64) -> Vector7 {
    let innov = e_meas - z[0];
    let l = &m.l;
    let k = &m.k;
    let w2 = m.omega_r_hat * m.omega_r_hat;
    let row4 = -k[0] * z[0] - k[1] * z[1] - k[2] * z[2] - k[3] * z[3] + z[4];
    Vector7::from_column_slice(&[
        z[1] + l[0] * innov,
        z[2] + l[1] * innov,
        z[3] + l[2] * innov,
        row4 - (m.b0_hat * u - u0) + l[3] * innov,
        z[5] + l[4] * innov,
        z[6] + l[5] * innov,
        -w2 * z[5] + l[6] * innov,
    ])
}

/// The same observer written as a pure seventh-order integrator chain.
pub fn gpio_derivative(m: &ObserverMatrices, z: &Vector7, u: f64, u0: f64, e_meas: f64) -> Vector7 {
    let innov = e_meas - z[0];
    let l = &m.l;
    let k = &m.k;
    let row4 = -k[0] * z[0] - k[1] * z[1] - k[2] * z[2] - k[3] * z[3] + z[4];
    Vector7::from_column_slice(&[
        z[1] + l[0] * innov,
        z[2] + l[1] * innov,
        z[3] + l[2] * innov,
        row4 - (m.b0_hat * u - u0) + l[3] * innov,
        z[5] + l[4] * innov,
        z[6] + l[5] * innov,
        l[6] * innov,
    ])
}

/// Result of driving the observer with a known extended state.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionReport {
    /// `max |z_hat - z|` over the final window divided by `max |z|` over the run.
    pub relative_error: f64,
    /// Same ratio for each of the seven components.
    pub component_errors: [f64; 7],
    /// `max |F_hat - F|` over the final window, absolute.
    pub disturbance_residual: f64,
}

/// Truth-model injection.
///
/// The error chain `e'''' = -k e + F - (b0_hat u - u0)` is integrated next to
/// the observer with `F(t) = c0 + a1 sin(omega t)` given in closed form and
/// `u = (k0 e + F_hat) / b0_hat`, `b0_hat = 1`. Everything starts at zero.
pub fn inject_truth(
    g: &crate::tuning::GainSet,
    c0: f64,
    a1: f64,
    omega: f64,
    horizon: f64,
    h: f64,
    window: f64,
) -> Result<InjectionReport> {
    if !(h > 0.0 && window > 0.0 && horizon >= window) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("h = {h}, horizon = {horizon}, window = {window}"),
        });
    }
    let m = g.observer_matrices(1.0)?;
    let f = |t: f64| {
        let (s, c) = (omega * t).sin_cos();
        [c0 + a1 * s, a1 * omega * c, -a1 * omega * omega * s]
    };
    type S = SVector<f64, 11>;
    let rhs = |t: f64, s: &S| -> S {
        let e = [s[0], s[1], s[2], s[3]];
        let z = Vector7::from_fn(|i, _| s[4 + i]);
        let u0 = m.k[0] * e[0];
        let u = (u0 + z[4]) / m.b0_hat;
        let ke: f64 = m.k.iter().zip(&e).map(|(a, b)| a * b).sum();
        let dz = reso_derivative(&m, &z, u, u0, e[0]);
        let mut d = S::zeros();
        d[0] = e[1];
        d[1] = e[2];
        d[2] = e[3];
        d[3] = -ke + f(t)[0] - (m.b0_hat * u - u0);
        d.fixed_rows_mut::<7>(4).copy_from(&dz);
        d
    };
    let n = (horizon / h).round() as usize;
    let tail = ((horizon - window) / h).round() as usize;
    let mut s = S::zeros();
    let mut scale = 0.0f64;
    let mut err = [0.0f64; 7];
    for i in 0..=n {
        let t = i as f64 * h;
        let ft = f(t);
        let truth = [s[0], s[1], s[2], s[3], ft[0], ft[1], ft[2]];
        scale = truth.iter().fold(scale, |a, v| a.max(v.abs()));
        if i >= tail {
            for j in 0..7 {
                err[j] = err[j].max((s[4 + j] - truth[j]).abs());
            }
        }
        if i == n {
            break;
        }
        let k1 = rhs(t, &s);
        let k2 = rhs(t + 0.5 * h, &(s + k1 * (0.5 * h)));
        let k3 = rhs(t + 0.5 * h, &(s + k2 * (0.5 * h)));
        let k4 = rhs(t + h, &(s + k3 * h));
        s += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { time: t + h, last_state: s.iter().copied().collect() });
        }
    }
    Ok(InjectionReport {
        relative_error: err.iter().fold(0.0f64, |a, &b| a.max(b)) / scale,
        component_errors: err.map(|v| v / scale),
        disturbance_residual: err[4],
    })
}
