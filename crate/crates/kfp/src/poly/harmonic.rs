//! Scaled inner product, harmonic decomposition and the inverse-Laplacian `S`.
//!
//! Everything here works relative to a constant positive-definite [`Metric`]
//! `A`: the Laplacian becomes `Delta_A = sum a_ij d_i d_j` and the squared
//! radius becomes `Q_A(x) = x^T A^{-1} x`. With `A = I` these are the usual
//! objects.

use super::multipoly::MultiPoly;
use super::scalar::{factorial, invert, pow, Scalar};
use super::PolyError;
use crate::multi_index;

/// A constant symmetric positive-definite coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric<T: Scalar> {
    a: Vec<Vec<T>>,
    radius_sq: MultiPoly<T>,
}

impl<T: Scalar> Metric<T> {
    pub fn identity(dim: usize) -> Self {
        let a = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Self::new(a).expect("identity is invertible")
    }

    /// Fails with [`PolyError::DegenerateSecondOrder`] when `a` is singular
    /// or not symmetric.
    pub fn new(a: Vec<Vec<T>>) -> Result<Self, PolyError> {
        let d = a.len();
        if a.iter().any(|r| r.len() != d) {
            return Err(PolyError::DimensionMismatch { expected: d, found: a.iter().map(|r| r.len()).max().unwrap_or(0) });
        }
        for i in 0..d {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(PolyError::DegenerateSecondOrder("coefficient matrix is not symmetric".into()));
                }
            }
        }
        let inv = invert(&a).ok_or_else(|| PolyError::DegenerateSecondOrder("coefficient matrix is singular".into()))?;
        let mut radius_sq = MultiPoly::zero(d);
        for i in 0..d {
            for j in 0..d {
                let alpha = multi_index::add(&multi_index::unit(d, i), &multi_index::unit(d, j));
                radius_sq.add_term(alpha, inv[i][j].clone());
            }
        }
        Ok(Metric { a, radius_sq })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn matrix(&self) -> &[Vec<T>] {
        &self.a
    }

    /// `Q_A(x) = x^T A^{-1} x`.
    pub fn radius_sq(&self) -> &MultiPoly<T> {
        &self.radius_sq
    }

    /// `Delta_A p = sum_ij a_ij d_i d_j p`.
    pub fn laplacian(&self, p: &MultiPoly<T>) -> MultiPoly<T> {
        let d = self.dim();
        let mut out = MultiPoly::zero(d);
        for i in 0..d {
            let di = p.derivative(i);
            for j in 0..d {
                if self.a[i][j].is_zero() {
                    continue;
                }
                out = &out + &di.derivative(j).scale(&self.a[i][j]);
            }
        }
        out
    }

    fn laplacian_pow(&self, p: &MultiPoly<T>, k: u32) -> MultiPoly<T> {
        (0..k).fold(p.clone(), |acc, _| self.laplacian(&acc))
    }

    fn radius_pow(&self, k: u32) -> MultiPoly<T> {
        let d = self.dim();
        (0..k).fold(MultiPoly::constant(d, T::one()), |acc, _| &acc * &self.radius_sq)
    }
}

/// `<p, q>_r = sum_alpha r^{2|alpha|} alpha! p_alpha q_alpha`.
pub fn pr_inner<T: Scalar>(p: &MultiPoly<T>, q: &MultiPoly<T>, r: &T) -> T {
    assert_eq!(p.dim(), q.dim(), "dimension mismatch");
    let r2 = r.clone() * r.clone();
    let mut acc = T::zero();
    for (alpha, c) in p.terms() {
        let other = q.coeff(alpha);
        if other.is_zero() {
            continue;
        }
        let weight = alpha.iter().fold(pow(&r2, multi_index::degree(alpha)), |w, &a| w * factorial::<T>(a));
        acc = acc + weight * c.clone() * other;
    }
    acc
}

/// `||p||_r` in floating point.
pub fn pr_norm<T: Scalar>(p: &MultiPoly<T>, r: f64) -> f64 {
    pr_inner(&p.to_f64(), &p.to_f64(), &r).max(0.0).sqrt()
}

fn require_homogeneous<T: Scalar>(p: &MultiPoly<T>) -> Result<u32, PolyError> {
    let m = p.degree().unwrap_or(0);
    if p.is_homogeneous(m) {
        Ok(m)
    } else {
        Err(PolyError::NotHomogeneous)
    }
}

/// Components `h_k` (index `k`) with `p = sum Q_A^k h_k` and each `h_k`
/// annihilated by `Delta_A`.
pub fn harmonic_decompose_in<T: Scalar>(p: &MultiPoly<T>, metric: &Metric<T>) -> Result<Vec<MultiPoly<T>>, PolyError> {
    if p.dim() != metric.dim() {
        return Err(PolyError::DimensionMismatch { expected: metric.dim(), found: p.dim() });
    }
    let m = require_homogeneous(p)?;
    let d = p.dim() as i64;
    let top = m / 2;
    let mut parts = vec![MultiPoly::zero(p.dim()); top as usize + 1];
    let mut rest = p.clone();
    for k in (0..=top).rev() {
        let ell = (m - 2 * k) as i64;
        // Delta_A^k (Q_A^k h) = prod_{j=1..k} 2j(2j + d - 2 + 2 ell) h
        let c = (1..=k as i64).fold(T::one(), |acc, j| acc * T::from_i64(2 * j * (2 * j + d - 2 + 2 * ell)));
        let h = metric.laplacian_pow(&rest, k).scale(&(T::one() / c));
        rest = &rest - &(&metric.radius_pow(k) * &h);
        parts[k as usize] = h;
    }
    debug_assert!(rest.is_zero());
    Ok(parts)
}

pub fn harmonic_decompose<T: Scalar>(p: &MultiPoly<T>) -> Result<Vec<MultiPoly<T>>, PolyError> {
    harmonic_decompose_in(p, &Metric::identity(p.dim()))
}

/// `S_A p`: the right inverse of `Delta_A` mapping `Q_A^k h_k` to
/// `Q_A^{k+1} h_k / b_k` with `b_k = (2k+2)(d+2m-2k)`.
pub fn s_apply_in<T: Scalar>(p: &MultiPoly<T>, metric: &Metric<T>) -> Result<MultiPoly<T>, PolyError> {
    if p.is_zero() {
        return Ok(MultiPoly::zero(p.dim()));
    }
    let m = require_homogeneous(p)? as i64;
    let d = p.dim() as i64;
    let parts = harmonic_decompose_in(p, metric)?;
    let mut out = MultiPoly::zero(p.dim());
    for (k, h) in parts.iter().enumerate() {
        if h.is_zero() {
            continue;
        }
        let k = k as i64;
        let b = T::from_i64((2 * k + 2) * (d + 2 * m - 2 * k));
        out = &out + &(&metric.radius_pow(k as u32 + 1) * h).scale(&(T::one() / b));
    }
    Ok(out)
}

pub fn s_apply<T: Scalar>(p: &MultiPoly<T>) -> Result<MultiPoly<T>, PolyError> {
    s_apply_in(p, &Metric::identity(p.dim()))
}

/// `S_A` applied to each homogeneous part of an arbitrary polynomial.
pub fn s_apply_graded<T: Scalar>(p: &MultiPoly<T>, metric: &Metric<T>) -> Result<MultiPoly<T>, PolyError> {
    let mut out = MultiPoly::zero(p.dim());
    for m in 0..=p.degree().unwrap_or(0) {
        let part = p.homogeneous_part(m);
        if !part.is_zero() {
            out = &out + &s_apply_in(&part, metric)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::scalar::{rat, Rational};

    #[test]
    fn low_order_s_values() {
        let one = MultiPoly::constant(3, rat(1, 1));
        let s = s_apply(&one).unwrap();
        let expect = Metric::<Rational>::identity(3).radius_sq().scale(&rat(1, 6));
        assert_eq!(s, expect);
    }

    #[test]
    fn metric_laplacian_of_radius_is_twice_dimension() {
        let a = vec![vec![rat(2, 1), rat(1, 2)], vec![rat(1, 2), rat(3, 1)]];
        let m = Metric::new(a).unwrap();
        assert_eq!(m.laplacian(m.radius_sq()), MultiPoly::constant(2, rat(4, 1)));
    }

    #[test]
    fn rejects_inhomogeneous() {
        let p = &MultiPoly::var(2, 0) + &MultiPoly::constant(2, rat(1, 1));
        assert!(matches!(s_apply(&p), Err(PolyError::NotHomogeneous)));
    }
}
