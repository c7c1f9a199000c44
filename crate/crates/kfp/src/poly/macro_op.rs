//! The constant-coefficient macroscopic operator `q -> sum_alpha c_alpha d^alpha q`
//! and its exact polynomial right inverse.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::harmonic::{pr_norm, s_apply_graded, Metric};
use super::multipoly::MultiPoly;
use super::scalar::{Rational, Scalar};
use super::PolyError;
use crate::multi_index;

/// Effective coefficients `c_alpha` for `2 <= |alpha| <= order`.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroTensors<T: Scalar> {
    dim: usize,
    order: u32,
    coeffs: BTreeMap<Vec<u32>, T>,
}

/// Result of [`MacroTensors::invert`].
#[derive(Clone, Debug)]
pub struct MacroInverse<T: Scalar> {
    pub q: MultiPoly<T>,
    /// `||q||_r / ||p||_r`.
    pub norm_ratio: f64,
}

impl<T: Scalar> MacroTensors<T> {
    pub fn zero(dim: usize, order: u32) -> Self {
        MacroTensors {
            dim,
            order,
            coeffs: BTreeMap::new(),
        }
    }

    /// The Laplacian: `c_{2e_i} = 1`, everything else zero.
    pub fn laplacian(dim: usize, order: u32) -> Self {
        let mut t = Self::zero(dim, order.max(2));
        for i in 0..dim {
            t.set(multi_index::unit(dim, i).iter().map(|&a| 2 * a).collect(), T::one());
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Entries with `|alpha| < 2` or `|alpha| > order` are ignored.
    pub fn set(&mut self, alpha: Vec<u32>, c: T) {
        let n = multi_index::degree(&alpha);
        assert_eq!(alpha.len(), self.dim, "multi-index length");
        if n < 2 || n > self.order {
            return;
        }
        if c.is_zero() {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
    }

    pub fn get(&self, alpha: &[u32]) -> T {
        self.coeffs.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, &T)> {
        self.coeffs.iter()
    }

    /// Same operator with only the tensors up to `order` kept.
    pub fn truncated(&self, order: u32) -> Self {
        let mut t = Self::zero(self.dim, order);
        for (a, c) in &self.coeffs {
            t.set(a.clone(), c.clone());
        }
        t
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MacroTensors<U> {
        let mut t = MacroTensors::zero(self.dim, self.order);
        for (a, c) in &self.coeffs {
            t.set(a.clone(), f(c));
        }
        t
    }

    /// Matrix `A` with `sum_{|alpha|=2} c_alpha d^alpha = sum_ij A_ij d_i d_j`.
    pub fn second_order_matrix(&self) -> Vec<Vec<T>> {
        let d = self.dim;
        let half = T::one() / T::from_i64(2);
        let mut a = vec![vec![T::zero(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let alpha = multi_index::add(&multi_index::unit(d, i), &multi_index::unit(d, j));
                let c = self.get(&alpha);
                a[i][j] = if i == j { c } else { c * half.clone() };
            }
        }
        a
    }

    /// `sum_alpha c_alpha d^alpha q`.
    pub fn apply(&self, q: &MultiPoly<T>) -> Result<MultiPoly<T>, PolyError> {
        if q.dim() != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, found: q.dim() });
        }
        let deg = q.degree().unwrap_or(0);
        if deg > self.order && deg > 1 {
            return Err(PolyError::InsufficientOrder { needed: deg, available: self.order });
        }
        let mut out = MultiPoly::zero(self.dim);
        for (alpha, c) in &self.coeffs {
            if multi_index::degree(alpha) > deg {
                continue;
            }
            out = &out + &q.derivative_multi(alpha).scale(c);
        }
        Ok(out)
    }

    fn check_second_order(&self) -> Result<Metric<T>, PolyError> {
        let a = self.second_order_matrix();
        let d = self.dim;
        let m = DMatrix::from_fn(d, d, |i, j| a[i][j].to_f64());
        let eig = m.symmetric_eigen().eigenvalues;
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(0.0, f64::max);
        if !(lo > 1e-12 * hi.max(f64::MIN_POSITIVE)) {
            return Err(PolyError::DegenerateSecondOrder(format!(
                "second-order coefficients have eigenvalues in [{lo:e}, {hi:e}]"
            )));
        }
        Metric::new(a)
    }

    /// Exact `q` of degree `deg p + 2` with `apply(q) == p`.
    ///
    /// Neumann iteration `q <- q + S_A(p - apply(q))` with `S_A` the harmonic
    /// right inverse of the second-order part; every step lowers the degree of
    /// the residual, so it vanishes after at most `deg p + 1` rounds.
    pub fn invert(&self, p: &MultiPoly<T>, r: f64) -> Result<MacroInverse<T>, PolyError> {
        if p.dim() != self.dim {
            return Err(PolyError::DimensionMismatch { expected: self.dim, found: p.dim() });
        }
        let metric = self.check_second_order()?;
        let Some(deg) = p.degree() else {
            return Ok(MacroInverse {
                q: MultiPoly::zero(self.dim),
                norm_ratio: 0.0,
            });
        };
        if self.order < deg + 2 {
            return Err(PolyError::InsufficientOrder { needed: deg + 2, available: self.order });
        }
        let mut q = MultiPoly::zero(self.dim);
        let mut residual = p.clone();
        for _ in 0..=deg + 1 {
            if residual.is_zero() {
                break;
            }
            q = &q + &s_apply_graded(&residual, &metric)?;
            residual = p - &self.apply(&q)?;
        }
        if !residual.is_zero() && residual.max_coeff() > 1e-9 * p.max_coeff() {
            return Err(PolyError::DegenerateSecondOrder("inverse iteration did not terminate".into()));
        }
        let norm_ratio = pr_norm(&q, r) / pr_norm(p, r);
        Ok(MacroInverse { q, norm_ratio })
    }
}

impl MacroTensors<f64> {
    /// Exact rational image of float tensors.
    pub fn to_rational(&self) -> MacroTensors<Rational> {
        self.map(|c| Rational::from_f64(*c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::scalar::rat;

    #[test]
    fn laplacian_of_radius() {
        let t = MacroTensors::<Rational>::laplacian(3, 4);
        let r2 = Metric::<Rational>::identity(3).radius_sq().clone();
        assert_eq!(t.apply(&r2).unwrap(), MultiPoly::constant(3, rat(6, 1)));
        assert!(t.apply(&MultiPoly::constant(3, rat(5, 1))).unwrap().is_zero());
    }

    #[test]
    fn degenerate_matrix_rejected() {
        let mut t = MacroTensors::<Rational>::zero(2, 4);
        t.set(vec![2, 0], rat(1, 1));
        let p = MultiPoly::constant(2, rat(1, 1));
        assert!(matches!(t.invert(&p, 1.0), Err(PolyError::DegenerateSecondOrder(_))));
    }

    #[test]
    fn order_too_low_rejected() {
        let t = MacroTensors::<Rational>::laplacian(2, 2);
        let p = MultiPoly::var(2, 0);
        assert!(matches!(t.invert(&p, 1.0), Err(PolyError::InsufficientOrder { .. })));
    }
}
