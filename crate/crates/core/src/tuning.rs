//! Bandwidth parametrisation of the controller and observer gains.
//!
//! Controller poles all sit at `-omega_c`, observer-error poles at `-omega_o`.
//! Observer gains follow a sequential recursion in which each `l_i` consumes
//! the previously computed ones.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, pow, q, Scalar, Q};
use crate::observer::{build_abar, h_rows, to_matrix, ObserverMatrices};

pub const BINOM4: [i64; 5] = [1, 4, 6, 4, 1];
pub const BINOM7: [i64; 8] = [1, 7, 21, 35, 35, 21, 7, 1];

/// Which version of the observer-gain recursion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableForm {
    /// Places all seven poles at `-omega_o` for any `k`.
    Corrected,
    /// Drops `k0` from `l4` and `l6`; misses the poles whenever `k0` matters.
    WithoutK0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub k: [f64; 4],
    pub l: [f64; 7],
    pub omega_c: f64,
    pub omega_o: f64,
    pub omega_r_hat: f64,
}

/// `[k0, k1, k2, k3]` with `k_i = C(4, i) omega_c^(4 - i)`.
pub fn controller_gains_generic<T: Scalar>(wc: &T) -> [T; 4] {
    std::array::from_fn(|i| T::int(BINOM4[i]) * pow(wc, (4 - i) as u32))
}

pub fn controller_gains(omega_c: f64) -> Result<[f64; 4]> {
    positive("omega_c", omega_c)?;
    Ok(controller_gains_generic(&omega_c))
}

pub fn observer_gains_generic<T: Scalar>(wo: &T, k: &[T; 4], w2: &T, form: TableForm) -> [T; 7] {
    let c = |v: i64, p: u32| T::int(v) * pow(wo, p);
    let [k0, k1, k2, k3] = k.clone();
    let k0_term = match form {
        TableForm::Corrected => k0.clone(),
        TableForm::WithoutK0 => T::int(0),
    };
    let l1 = c(7, 1) - k3.clone();
    let l2 = c(21, 2) - k2.clone() - l1.clone() * k3.clone() - w2.clone();
    let l3 = c(35, 3)
        - k1.clone()
        - l1.clone() * k2.clone()
        - l2.clone() * k3.clone()
        - w2.clone() * (l1.clone() + k3.clone());
    let l4 = c(35, 4)
        - l1.clone() * k1.clone()
        - l2.clone() * k2.clone()
        - l3.clone() * k3.clone()
        - w2.clone() * (l1.clone() * k3.clone() + l2.clone() + k2.clone())
        - k0_term.clone();
    let l5 = c(21, 5) - w2.clone() * (l3.clone() + k1.clone() + l1.clone() * k2.clone() + l2.clone() * k3.clone());
    let l6 = c(7, 6)
        - w2.clone()
            * (l4.clone() + l1.clone() * k1.clone() + l2.clone() * k2.clone() + l3.clone() * k3.clone() + k0_term);
    let l7 = c(1, 7) - l5.clone() * w2.clone();
    [l1, l2, l3, l4, l5, l6, l7]
}

/// Observer gains without the positivity check.
pub fn observer_gains_unchecked(omega_o: f64, k: &[f64; 4], omega_r_hat: f64, form: TableForm) -> [f64; 7] {
    observer_gains_generic(&omega_o, k, &(omega_r_hat * omega_r_hat), form)
}

pub fn observer_gains(omega_o: f64, k: &[f64; 4], omega_r_hat: f64) -> Result<[f64; 7]> {
    positive("omega_o", omega_o)?;
    if !(omega_r_hat.is_finite() && omega_r_hat >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_r_hat",
            reason: format!("{omega_r_hat} must be finite and >= 0"),
        });
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("controller gains"));
    }
    let l = observer_gains_unchecked(omega_o, k, omega_r_hat, TableForm::Corrected);
    if let Some((i, &v)) = l.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InfeasibleTuning { index: i + 1, value: v });
    }
    Ok(l)
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("{v} must be finite and > 0") })
    }
}

impl GainSet {
    pub fn from_bandwidths(omega_c: f64, omega_o: f64, omega_r_hat: f64) -> Result<Self> {
        let k = controller_gains(omega_c)?;
        let l = observer_gains(omega_o, &k, omega_r_hat)?;
        Ok(Self { k, l, omega_c, omega_o, omega_r_hat })
    }

    /// Same as [`GainSet::from_bandwidths`] but keeps non-positive `l_i`.
    pub fn from_bandwidths_unchecked(omega_c: f64, omega_o: f64, omega_r_hat: f64, form: TableForm) -> Self {
        let k = controller_gains_generic(&omega_c);
        let l = observer_gains_unchecked(omega_o, &k, omega_r_hat, form);
        Self { k, l, omega_c, omega_o, omega_r_hat }
    }

    pub fn observer_matrices(&self, b0_hat: f64) -> Result<ObserverMatrices> {
        build_abar(&self.k, self.omega_r_hat)?.with_gains(&self.l)?.with_b0_hat(b0_hat)
    }

    /// `H = A_bar - l c` without validation.
    pub fn h_matrix(&self) -> crate::observer::Matrix7 {
        to_matrix(&h_rows(&self.k, &self.l, &(self.omega_r_hat * self.omega_r_hat)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleReport {
    /// `det(lambda I - H)` coefficients, descending.
    pub coefficients: [f64; 8],
    /// Binomial coefficients of `(lambda + omega_o)^7`.
    pub expected: [f64; 8],
    pub max_coefficient_deviation: f64,
    /// Largest relative gap between a stored `l_i` and its exact closed-form value.
    pub gain_rounding: f64,
    /// Whether the stored gains are the closed-form gains up to rounding; if so the
    /// coefficients above are those of the exact gains.
    pub table_gains: bool,
    /// Coefficient deviation of the stored f64 gains taken literally. Can reach
    /// 1e-8 when `omega_r_hat >> omega_o` because the coefficients are small
    /// differences of large gain products.
    pub stored_coefficient_deviation: f64,
    /// Eigenvalues of `H`, with multiplicity.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Eigenvalues of the scaled matrix `H_q`.
    pub scaled_eigenvalues: Vec<Complex<f64>>,
    /// `max |lambda(H_q) + 1|`.
    pub max_eigenvalue_deviation: f64,
    /// Plain f64 QR eigenvalues of `H_q`; scattered around -1 for a Jordan block.
    pub float_scaled_eigenvalues: Vec<Complex<f64>>,
    pub hurwitz: bool,
    pub coefficients_ok: bool,
    pub eigenvalues_ok: bool,
}

impl PoleReport {
    pub fn passed(&self) -> bool {
        self.coefficients_ok && self.eigenvalues_ok
    }
}

pub const COEFF_TOL: f64 = 1e-9;
pub const EIG_TOL: f64 = 1e-6;
/// Stored gains within this relative distance of the exact closed-form values count as rounded closed-form gains.
pub const GAIN_ROUNDING_TOL: f64 = 8.0 * f64::EPSILON;

/// `H_q = eps Lambda^-1 H Lambda` entrywise, `Lambda = diag(wo^-6, ..., wo^-1, 1)`.
pub fn scale_exact(h: &[Vec<Q>], wo: &Q) -> Vec<Vec<Q>> {
    let inv = Q::from_integer(1.into()) / wo.clone();
    (0..7)
        .map(|i| {
            (0..7)
                .map(|j| {
                    let p = j as i32 - i as i32 - 1;
                    let f = if p >= 0 { pow(wo, p as u32) } else { pow(&inv, (-p) as u32) };
                    h[i][j].clone() * f
                })
                .collect()
        })
        .collect()
}

/// Check that the gains place every observer-error pole at `-omega_o`.
///
/// All arithmetic is rational. The closed-form gain recursion is re-evaluated exactly
/// from `(k, omega_o, omega_r_hat)`. When the stored gains agree with it to a
/// few ulps the coefficients are taken from the exact gains, so rounding of the
/// stored values is not mistaken for a placement error; any other gain set is
/// checked literally. Eigenvalues are computed on the exact `H_q` and mapped
/// back by `omega_o`.
pub fn verify_poles(g: &GainSet) -> Result<PoleReport> {
    let wo = q(g.omega_o)?;
    let wr = q(g.omega_r_hat)?;
    let w2 = wr.clone() * wr;
    let k: [Q; 4] = [q(g.k[0])?, q(g.k[1])?, q(g.k[2])?, q(g.k[3])?];
    let mut l_stored: Vec<Q> = Vec::with_capacity(7);
    for &v in &g.l {
        l_stored.push(q(v)?);
    }
    let l_stored: [Q; 7] = l_stored.try_into().expect("seven gains");

    let expected: Vec<Q> = (0..8).map(|i| Q::int(BINOM7[i]) * pow(&wo, i as u32)).collect();
    let deviation = |cp: &[Q]| cp.iter().zip(&expected).map(|(a, b)| exact::rel_dev(a, b)).fold(0.0, f64::max);
    let stored_cp = exact::charpoly(&h_rows(&k, &l_stored, &w2));
    let stored_coefficient_deviation = deviation(&stored_cp);

    let l_exact = observer_gains_generic(&wo, &k, &w2, TableForm::Corrected);
    let gain_rounding = l_stored.iter().zip(&l_exact).map(|(a, b)| exact::rel_dev(a, b)).fold(0.0, f64::max);
    let table_gains = gain_rounding <= GAIN_ROUNDING_TOL;
    let cp = if table_gains { exact::charpoly(&h_rows(&k, &l_exact, &w2)) } else { stored_cp };
    let max_coefficient_deviation = deviation(&cp);
    let hq = scale_exact(&h_rows(&k, &l_exact, &w2), &wo);
    let scaled_eigenvalues = exact::eigenvalues(&hq);
    let max_eigenvalue_deviation = scaled_eigenvalues.iter().map(|z| (z + 1.0).norm()).fold(0.0, f64::max);
    let eigenvalues = scaled_eigenvalues.iter().map(|z| z * g.omega_o).collect();

    let hq_f: Vec<Vec<f64>> = hq.iter().map(|r| r.iter().map(exact::to_f64).collect()).collect();
    let float_scaled_eigenvalues: Vec<Complex<f64>> = to_matrix(&hq_f).complex_eigenvalues().iter().copied().collect();
    let hurwitz = float_scaled_eigenvalues.iter().all(|z| z.re < 0.0);

    Ok(PoleReport {
        coefficients: std::array::from_fn(|i| exact::to_f64(&cp[i])),
        expected: std::array::from_fn(|i| exact::to_f64(&expected[i])),
        coefficients_ok: max_coefficient_deviation <= COEFF_TOL,
        eigenvalues_ok: scaled_eigenvalues.len() == 7 && max_eigenvalue_deviation <= EIG_TOL,
        max_coefficient_deviation,
        gain_rounding,
        table_gains,
        stored_coefficient_deviation,
        eigenvalues,
        scaled_eigenvalues,
        max_eigenvalue_deviation,
        float_scaled_eigenvalues,
        hurwitz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn controller_examples() {
        assert_eq!(controller_gains(1.0).unwrap(), [1.0, 4.0, 6.0, 4.0]);
        let k = controller_gains(0.35).unwrap();
        let want = [0.01500625, 0.1715, 0.735, 1.4];
        for i in 0..4 {
            assert!((k[i] - want[i]).abs() < 1e-15, "k{i} = {}", k[i]);
        }
        let k = controller_gains(2.0).unwrap();
        assert_eq!((k[0], k[3]), (16.0, 8.0));
        assert!(controller_gains(0.0).is_err());
        assert!(controller_gains(-1.0).is_err());
    }

    #[test]
    fn pure_binomial_observer() {
        let l = observer_gains(1.0, &[0.0; 4], 0.0).unwrap();
        assert_eq!(l, [7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0]);
    }

    #[test]
    fn nominal_tuning_first_and_last_gain() {
        let g = GainSet::from_bandwidths(0.35, 140.0, 0.0).unwrap();
        assert!((g.l[0] - 978.6).abs() < 1e-12);
        let w = 6.0 * PI;
        let g = GainSet::from_bandwidths(0.35, 140.0, w).unwrap();
        let want = 140f64.powi(7) - g.l[4] * w * w;
        assert_eq!(g.l[6], want);
    }

    #[test]
    fn small_observer_bandwidth_is_rejected() {
        // omega_o = omega_c with a strong resonant term drives l2 negative.
        let k = controller_gains(1.0).unwrap();
        assert!(matches!(observer_gains(1.0, &k, 6.0 * PI), Err(Error::InfeasibleTuning { .. })));
    }

    #[test]
    fn rounding_is_not_a_placement_error() {
        // omega_r_hat far above omega_o: coefficients are differences of ~1e8 terms.
        let g = GainSet::from_bandwidths_unchecked(0.35, 1.0, 6.0 * PI, TableForm::Corrected);
        let r = verify_poles(&g).unwrap();
        assert!(r.table_gains && r.passed());
        assert!(r.stored_coefficient_deviation > 1e-12);
        let mut bad = g;
        bad.l[3] *= 1.0 + 1e-9;
        let r = verify_poles(&bad).unwrap();
        assert!(!r.table_gains && !r.passed());
    }

    #[test]
    fn unit_bandwidth_poles() {
        let g = GainSet {
            k: [0.0; 4],
            l: [7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0],
            omega_c: 0.0,
            omega_o: 1.0,
            omega_r_hat: 0.0,
        };
        let r = verify_poles(&g).unwrap();
        assert!(r.passed());
        assert!(r.eigenvalues.iter().all(|z| *z == Complex::new(-1.0, 0.0)));
    }

    #[test]
    fn constant_coefficient_at_ten() {
        let g = GainSet::from_bandwidths(1.0, 10.0, 0.0).unwrap();
        let r = verify_poles(&g).unwrap();
        assert!(r.passed(), "{}", r.max_coefficient_deviation);
        assert!((r.coefficients[7] - 1e7).abs() <= 1e-9 * 1e7);
    }

    #[test]
    fn nominal_tuning_eigenvalues() {
        let g = GainSet::from_bandwidths(0.35, 140.0, 6.0 * PI).unwrap();
        let r = verify_poles(&g).unwrap();
        assert!(r.passed());
        assert!(r.eigenvalues_ok);
        assert!(r.hurwitz);
        for z in &r.eigenvalues {
            assert!((z + 140.0).norm() / 140.0 < 1e-6, "{z}");
        }
    }

    #[test]
    fn dropping_k0_misses_poles_when_it_matters() {
        let g = GainSet::from_bandwidths_unchecked(1.0, 1.0, 0.0, TableForm::WithoutK0);
        let r = verify_poles(&g).unwrap();
        assert!(!r.passed());
        // Both forms agree once k0 is negligible.
        let g = GainSet::from_bandwidths_unchecked(1e-3, 10.0, 0.0, TableForm::WithoutK0);
        assert!(verify_poles(&g).unwrap().max_coefficient_deviation < 1e-9);
    }

    #[test]
    fn zero_resonance_reduces_to_plain_recursion() {
        // Independent oracle: match coefficients of (s + wo)^7 against the
        // characteristic polynomial of a GPIO with k folded in, solved as a
        // triangular system in f64.
        let wo: f64 = 25.0;
        let k = controller_gains(3.0).unwrap();
        let l = observer_gains(wo, &k, 0.0).unwrap();
        // For w2 = 0 the char-poly coefficients are
        // s1 = l1 + k3, s2 = l2 + k2 + l1 k3, s3 = l3 + k1 + l1 k2 + l2 k3,
        // s4 = l4 + k0 + l1 k1 + l2 k2 + l3 k3, s5 = l5, s6 = l6, s7 = l7.
        let s = [
            l[0] + k[3],
            l[1] + k[2] + l[0] * k[3],
            l[2] + k[1] + l[0] * k[2] + l[1] * k[3],
            l[3] + k[0] + l[0] * k[1] + l[1] * k[2] + l[2] * k[3],
            l[4],
            l[5],
            l[6],
        ];
        for i in 0..7 {
            let want = BINOM7[i + 1] as f64 * wo.powi(i as i32 + 1);
            assert!(((s[i] - want) / want).abs() < 1e-12, "s{}", i + 1);
        }
    }
}
