//! Singular-perturbation structure of the observer-error matrix.
//!
//! With `eps = 1/omega_o` and `Lambda = diag(omega_o^-6, ..., omega_o^-1, 1)`,
//! the scaled matrix `H_q = Lambda^-1 (eps H) Lambda` splits as `A_q + eps H_eps`
//! where `A_q` is the companion matrix of `(s + 1)^7`.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::exact::{self, q, Scalar, Q};
use crate::observer::{h_rows, Matrix7};
use crate::tuning::{scale_exact, verify_poles, GainSet, BINOM7};

pub const SIMILARITY_TOL: f64 = 1e-10;
pub const DECOMPOSITION_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDecomposition {
    pub h: Matrix7,
    pub lambda: Matrix7,
    pub eps: f64,
    pub h_q: Matrix7,
    pub a_q: Matrix7,
    pub h_eps: Matrix7,
    /// `r_i = beta_i omega_o^i + H[i][0]`.
    pub r: [f64; 7],
    /// `max |Lambda H_q Lambda^-1 - eps H|`, measured in scaled coordinates relative to `max |H_q|`.
    pub similarity_deviation: f64,
    /// `max |Lambda^-1 eps H Lambda - (A_q + eps H_eps)|` relative to each entry (floor 1).
    pub decomposition_deviation: f64,
    pub eigen_h_q: Vec<Complex<f64>>,
    pub eigen_a_q: Vec<Complex<f64>>,
    pub eigen_h: Vec<Complex<f64>>,
    pub max_eigen_deviation: f64,
    pub hurwitz_h_q: bool,
    pub hurwitz_a_q: bool,
    /// Structural facts of `H_q` worth flagging, such as non-obvious nonzero entries.
    pub notes: Vec<String>,
}

fn lambda(wo: f64) -> Matrix7 {
    Matrix7::from_diagonal(&nalgebra::SVector::<f64, 7>::from_fn(|i, _| wo.powi(i as i32 - 6)))
}

fn lambda_inv(wo: f64) -> Matrix7 {
    Matrix7::from_diagonal(&nalgebra::SVector::<f64, 7>::from_fn(|i, _| wo.powi(6 - i as i32)))
}

/// Companion matrix with first column `-beta_i` and ones on the superdiagonal.
pub fn a_q() -> Matrix7 {
    let mut a = Matrix7::zeros();
    for i in 0..7 {
        a[(i, 0)] = -(BINOM7[i + 1] as f64);
        if i < 6 {
            a[(i, i + 1)] = 1.0;
        }
    }
    a
}

fn max_entry(m: &Matrix7) -> (f64, usize, usize) {
    let mut best = (0.0, 0, 0);
    for i in 0..7 {
        for j in 0..7 {
            if m[(i, j)].abs() > best.0 {
                best = (m[(i, j)].abs(), i, j);
            }
        }
    }
    best
}

fn violation(identity: &'static str, (deviation, row, col): (f64, usize, usize), tolerance: f64) -> Result<()> {
    if deviation <= tolerance {
        Ok(())
    } else {
        Err(Error::IdentityViolation { identity, deviation, row, col, tolerance })
    }
}

/// Build every matrix of the decomposition and check its identities.
pub fn decompose(g: &GainSet) -> Result<PerturbationDecomposition> {
    let poles = verify_poles(g)?;
    if !poles.coefficients_ok {
        return Err(Error::IdentityViolation {
            identity: "pole placement",
            deviation: poles.max_coefficient_deviation,
            row: 0,
            col: 0,
            tolerance: crate::tuning::COEFF_TOL,
        });
    }
    let wo = g.omega_o;
    let eps = 1.0 / wo;
    let w2 = g.omega_r_hat * g.omega_r_hat;
    let h = g.h_matrix();
    let lam = lambda(wo);
    let lam_inv = lambda_inv(wo);

    let r: [f64; 7] = std::array::from_fn(|i| BINOM7[i + 1] as f64 * wo.powi(i as i32 + 1) + h[(i, 0)]);
    let mut h_eps = Matrix7::zeros();
    for i in 0..7 {
        h_eps[(i, 0)] = eps.powi(i as i32) * r[i];
    }
    h_eps[(3, 1)] = -eps * eps * g.k[1];
    h_eps[(3, 2)] = -eps * g.k[2];
    h_eps[(3, 3)] = -g.k[3];
    h_eps[(6, 5)] = -eps * w2;
    let a_q = a_q();
    let h_q = a_q + h_eps * eps;

    let by_similarity = lam_inv * (h * eps) * lam;
    let mut dec = Matrix7::zeros();
    for i in 0..7 {
        for j in 0..7 {
            dec[(i, j)] = (by_similarity[(i, j)] - h_q[(i, j)]).abs() / h_q[(i, j)].abs().max(1.0);
        }
    }
    let dec_max = max_entry(&dec);

    // Back-transform and compare with eps H, rescaled entrywise to H_q coordinates.
    let back = lam * h_q * lam_inv;
    let hq_scale = max_entry(&h_q).0;
    let mut sim = Matrix7::zeros();
    for i in 0..7 {
        for j in 0..7 {
            let to_scaled = lam_inv[(i, i)] * lam[(j, j)];
            sim[(i, j)] = (back[(i, j)] - eps * h[(i, j)]).abs() * to_scaled / hq_scale;
        }
    }
    let sim_max = max_entry(&sim);

    let eigen_h_q = poles.scaled_eigenvalues.clone();
    let aq_exact: Vec<Vec<Q>> = (0..7).map(|i| (0..7).map(|j| Q::int(a_q[(i, j)] as i64)).collect()).collect();
    let eigen_a_q = exact::eigenvalues(&aq_exact);
    let eigen_h = poles.eigenvalues.clone();
    let max_eigen_deviation = eigen_h_q
        .iter()
        .chain(&eigen_a_q)
        .map(|z| (z + 1.0).norm())
        .chain(eigen_h.iter().map(|z| (z + wo).norm() / wo))
        .fold(0.0, f64::max);
    let hurwitz_h_q = poles.hurwitz;
    let hurwitz_a_q = a_q.complex_eigenvalues().iter().all(|z| z.re < 0.0);

    let mut notes = Vec::new();
    if h_q[(2, 3)] != 0.0 {
        notes.push(format!("H_q(3,4) = {}: the scaled chain keeps its super-diagonal here", h_q[(2, 3)]));
    }

    violation("H_q = A_q + eps H_eps", dec_max, DECOMPOSITION_TOL)?;
    violation("eps H = Lambda H_q Lambda^-1", sim_max, SIMILARITY_TOL)?;
    if eigen_h_q.len() != 7 || eigen_a_q.len() != 7 || max_eigen_deviation > EIGEN_TOL {
        return Err(Error::IdentityViolation {
            identity: "eigenvalues at -1 (scaled) / -omega_o",
            deviation: max_eigen_deviation,
            row: 0,
            col: 0,
            tolerance: EIGEN_TOL,
        });
    }
    if !(hurwitz_h_q && hurwitz_a_q) {
        return Err(Error::IdentityViolation {
            identity: "Hurwitz H_q and A_q",
            deviation: f64::NAN,
            row: 0,
            col: 0,
            tolerance: 0.0,
        });
    }

    Ok(PerturbationDecomposition {
        h,
        lambda: lam,
        eps,
        h_q,
        a_q,
        h_eps,
        r,
        similarity_deviation: sim_max.0,
        decomposition_deviation: dec_max.0,
        eigen_h_q,
        eigen_a_q,
        eigen_h,
        max_eigen_deviation,
        hurwitz_h_q,
        hurwitz_a_q,
        notes,
    })
}

/// `H_q` in exact arithmetic from the stored gains, for callers that want it.
pub fn h_q_exact(g: &GainSet) -> Result<Vec<Vec<Q>>> {
    let k = [q(g.k[0])?, q(g.k[1])?, q(g.k[2])?, q(g.k[3])?];
    let mut l = Vec::with_capacity(7);
    for &v in &g.l {
        l.push(q(v)?);
    }
    let l: [Q; 7] = l.try_into().expect("seven gains");
    let wr = q(g.omega_r_hat)?;
    Ok(scale_exact(&h_rows(&k, &l, &(wr.clone() * wr)), &q(g.omega_o)?))
}
