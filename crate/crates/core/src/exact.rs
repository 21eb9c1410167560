//! Exact rational arithmetic for characteristic polynomials and their roots.
//!
//! A matrix whose spectrum is one eigenvalue of multiplicity seven is a single
//! Jordan block, and floating-point eigensolvers scatter such eigenvalues by
//! roughly `eps^(1/7)`. Working over the rationals sidesteps that: the
//! characteristic polynomial is computed exactly, repeated factors are split off
//! with Yun's square-free factorisation, and only the square-free parts are
//! handed to a numeric root finder.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// Ring operations shared by `f64` and exact rationals.
pub trait Scalar: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn int(v: i64) -> Self;
}

impl Scalar for f64 {
    fn int(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for Q {
    fn int(v: i64) -> Self {
        Q::from_integer(BigInt::from(v))
    }
}

pub fn pow<T: Scalar>(x: &T, n: u32) -> T {
    (0..n).fold(T::int(1), |acc, _| acc * x.clone())
}

/// The exact rational value of a finite `f64`.
pub fn q(v: f64) -> Result<Q> {
    Q::from_float(v).ok_or(Error::NonFinite("exact conversion"))
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Characteristic polynomial `det(lambda I - M)` by Faddeev-LeVerrier.
///
/// Returns coefficients in descending powers, leading 1.
pub fn charpoly(m: &[Vec<Q>]) -> Vec<Q> {
    let n = m.len();
    let mut coeffs = vec![Q::one()];
    let mut mk: Vec<Vec<Q>> = vec![vec![Q::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let c_prev = coeffs[k - 1].clone();
        let mut next = matmul(m, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &c_prev;
        }
        mk = next;
        let am = matmul(m, &mk);
        let trace: Q = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs.push(-trace / Q::from_integer(BigInt::from(k)));
    }
    coeffs
}

fn matmul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = a.len();
    let p = b[0].len();
    let mut out = vec![vec![Q::zero(); p]; n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..p {
                if !bk[j].is_zero() {
                    out[i][j] += &a[i][k] * &bk[j];
                }
            }
        }
    }
    out
}

/// Polynomial with ascending coefficients and no trailing zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Q>);

impl Poly {
    pub fn from_descending(c: &[Q]) -> Self {
        let mut v: Vec<Q> = c.iter().rev().cloned().collect();
        trim(&mut v);
        Poly(v)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn lead(&self) -> &Q {
        self.0.last().expect("nonzero polynomial")
    }

    fn monic(&self) -> Self {
        let l = self.lead().clone();
        Poly(self.0.iter().map(|c| c / &l).collect())
    }

    fn derivative(&self) -> Self {
        let mut v: Vec<Q> =
            self.0.iter().enumerate().skip(1).map(|(i, c)| c * Q::from_integer(BigInt::from(i))).collect();
        trim(&mut v);
        Poly(v)
    }

    fn sub(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        let mut v: Vec<Q> = (0..n)
            .map(|i| self.0.get(i).cloned().unwrap_or_else(Q::zero) - o.0.get(i).cloned().unwrap_or_else(Q::zero))
            .collect();
        trim(&mut v);
        Poly(v)
    }

    fn divrem(&self, d: &Self) -> (Self, Self) {
        let mut r = self.0.clone();
        let dd = d.degree();
        if self.0.len() < d.0.len() {
            return (Poly(vec![]), self.clone());
        }
        let mut quot = vec![Q::zero(); self.0.len() - dd];
        let lead = d.lead().clone();
        for i in (0..quot.len()).rev() {
            let c = &r[i + dd] / &lead;
            if !c.is_zero() {
                for (j, dj) in d.0.iter().enumerate() {
                    r[i + j] -= &c * dj;
                }
            }
            quot[i] = c;
        }
        r.truncate(dd);
        trim(&mut r);
        trim(&mut quot);
        (Poly(quot), Poly(r))
    }

    fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    fn exact_div(&self, d: &Self) -> Self {
        self.divrem(d).0
    }

    pub fn to_f64_ascending(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }
}

fn trim(v: &mut Vec<Q>) {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
}

/// Yun's square-free factorisation: `p = prod_i f_i^i` with each `f_i` square-free.
///
/// Returns `(f_i, i)` for every non-constant factor.
pub fn square_free(p: &Poly) -> Vec<(Poly, usize)> {
    let mut out = Vec::new();
    if p.degree() == 0 {
        return out;
    }
    let p = p.monic();
    let dp = p.derivative();
    let a0 = p.gcd(&dp);
    let mut b = p.exact_div(&a0);
    let mut c = dp.exact_div(&a0);
    let mut d = c.sub(&b.derivative());
    let mut i = 1;
    while b.degree() > 0 {
        let a = b.gcd(&d);
        if a.degree() > 0 {
            out.push((a.clone(), i));
        }
        b = b.exact_div(&a);
        c = d.exact_div(&a);
        d = c.sub(&b.derivative());
        i += 1;
    }
    out
}

/// Roots of a square-free rational polynomial, via the f64 companion matrix and Newton polishing.
pub fn simple_roots(p: &Poly) -> Vec<Complex<f64>> {
    let n = p.degree();
    if n == 0 {
        return vec![];
    }
    let monic = p.monic();
    if n == 1 {
        return vec![Complex::new(-to_f64(&monic.0[0]), 0.0)];
    }
    let c = monic.to_f64_ascending();
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i];
    }
    comp.complex_eigenvalues().iter().map(|&z| polish(&c, z)).collect()
}

fn polish(c: &[f64], mut z: Complex<f64>) -> Complex<f64> {
    for _ in 0..8 {
        let (mut f, mut df) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        for &ci in c.iter().rev() {
            df = df * z + f;
            f = f * z + ci;
        }
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// All eigenvalues of an exact matrix, with multiplicity.
pub fn eigenvalues(m: &[Vec<Q>]) -> Vec<Complex<f64>> {
    let cp = Poly::from_descending(&charpoly(m));
    let mut out = Vec::with_capacity(m.len());
    for (f, mult) in square_free(&cp) {
        for r in simple_roots(&f) {
            out.extend(std::iter::repeat_n(r, mult));
        }
    }
    out
}

/// Relative deviation of `a` from `b`, with `|b| = 0` falling back to absolute.
pub fn rel_dev(a: &Q, b: &Q) -> f64 {
    let diff = (a - b).abs();
    if b.is_zero() {
        to_f64(&diff)
    } else {
        to_f64(&(diff / b.abs()))
    }
}
