//! Controllability, flat-output gain and the lumped-disturbance oracle.

use nalgebra::{Matrix4, RowVector4};

use crate::error::{Error, Result};
use crate::plant::{PlantParams, PlantState, StateSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessAnalysis {
    /// Kalman matrix `[B_u | A B_u | A^2 B_u | A^3 B_u]`.
    pub q_c: Matrix4<f64>,
    pub rank: usize,
    /// `C A^3 B_u`.
    pub b0: f64,
    /// `E k_m / (C J L L_a)`.
    pub b0_closed_form: f64,
    /// Rows `C, CA, CA^2, CA^3`.
    pub t: Matrix4<f64>,
    pub t_inv: Matrix4<f64>,
}

/// Numerical rank after normalising columns to unit length.
///
/// Column scaling does not change rank and removes the 1e10 spread between
/// `B_u` and `A^3 B_u` that would otherwise swamp an absolute threshold.
pub fn numerical_rank(m: &Matrix4<f64>) -> usize {
    let mut scaled = *m;
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let sv = scaled.singular_values();
    let tol = 1e-10 * sv.max();
    sv.iter().filter(|&&s| s > tol).count()
}

pub fn controllability_matrix(ss: &StateSpace) -> Matrix4<f64> {
    let b1 = ss.b_u;
    let b2 = ss.a * b1;
    let b3 = ss.a * b2;
    let b4 = ss.a * b3;
    Matrix4::from_columns(&[b1, b2, b3, b4])
}

/// Stack `[C; CA; CA^2; CA^3]`, so `T x = [omega, omega', omega'', omega''']` when `tau = 0`.
pub fn output_stack(ss: &StateSpace) -> Matrix4<f64> {
    let r0 = ss.c;
    let r1 = r0 * ss.a;
    let r2 = r1 * ss.a;
    let r3 = r2 * ss.a;
    Matrix4::from_rows(&[r0, r1, r2, r3])
}

pub fn analyze(ss: &StateSpace, p: &PlantParams) -> Result<FlatnessAnalysis> {
    p.validate()?;
    let q_c = controllability_matrix(ss);
    let rank = numerical_rank(&q_c);
    if rank < 4 {
        return Err(Error::Singular { rank });
    }
    let t = output_stack(ss);
    let b0 = (t.row(3) * ss.b_u)[0];
    let t_inv = t.try_inverse().ok_or(Error::Singular { rank: numerical_rank(&t) })?;
    Ok(FlatnessAnalysis { q_c, rank, b0, b0_closed_form: p.flat_gain(), t, t_inv })
}

/// Output-side rows reused by the oracle and the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputChain {
    /// `C A^k` for k = 0..=4.
    pub ca: [RowVector4<f64>; 5],
    /// `C A^k B_d` for k = 0..=3.
    pub cab_d: [f64; 4],
    /// `C A^3 B_u`.
    pub b0: f64,
}

impl OutputChain {
    pub fn new(ss: &StateSpace) -> Self {
        let mut ca = [ss.c; 5];
        for k in 1..5 {
            ca[k] = ca[k - 1] * ss.a;
        }
        let cab_d = [(ca[0] * ss.b_d)[0], (ca[1] * ss.b_d)[0], (ca[2] * ss.b_d)[0], (ca[3] * ss.b_d)[0]];
        Self { ca, cab_d, b0: (ca[3] * ss.b_u)[0] }
    }

    /// `[omega, omega', omega'', omega''']` given load torque and its first two derivatives.
    ///
    /// Relies on `C B_u = C A B_u = C A^2 B_u = 0`, which holds structurally.
    pub fn speed_derivatives(&self, x: &PlantState, tau: &[f64; 4]) -> [f64; 4] {
        let d = &self.cab_d;
        let cx = |k: usize| (self.ca[k] * x.0)[0];
        [
            cx(0),
            cx(1) + d[0] * tau[0],
            cx(2) + d[1] * tau[0] + d[0] * tau[1],
            cx(3) + d[2] * tau[0] + d[1] * tau[1] + d[0] * tau[2],
        ]
    }

    /// Lumped disturbance without the `(C A^3 B_u - b0_hat) u` input term.
    pub fn unforced_disturbance(&self, x: &PlantState, tau: &[f64; 4]) -> f64 {
        let d = &self.cab_d;
        (self.ca[4] * x.0)[0] + d[3] * tau[0] + d[2] * tau[1] + d[1] * tau[2] + d[0] * tau[3]
    }

    pub fn total_disturbance(&self, x: &PlantState, tau: &[f64; 4], u: f64, b0_hat: f64) -> f64 {
        self.unforced_disturbance(x, tau) + (self.b0 - b0_hat) * u
    }
}

/// `F~ = CA^4 x + CA^3 B_d tau + CA^2 B_d tau' + CA B_d tau'' + C B_d tau''' + (CA^3 B_u - b0_hat) u`.
pub fn total_disturbance_oracle(ss: &StateSpace, x: &PlantState, tau_derivs: &[f64; 4], u: f64, b0_hat: f64) -> f64 {
    OutputChain::new(ss).total_disturbance(x, tau_derivs, u, b0_hat)
}
