//! Sparse multivariate polynomials over a [`Scalar`] field.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::{factorial, pow, Rational, Scalar};
use crate::multi_index;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly<T: Scalar> {
    dim: usize,
    terms: BTreeMap<Vec<u32>, T>,
}

pub type RatPoly = MultiPoly<Rational>;
pub type FloatPoly = MultiPoly<f64>;

impl<T: Scalar> MultiPoly<T> {
    pub fn zero(dim: usize) -> Self {
        MultiPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self::monomial(vec![0; dim], c)
    }

    pub fn monomial(alpha: Vec<u32>, c: T) -> Self {
        let dim = alpha.len();
        let mut p = Self::zero(dim);
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function `x_j`.
    pub fn var(dim: usize, j: usize) -> Self {
        Self::monomial(multi_index::unit(dim, j), T::one())
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, T)>) -> Self {
        let mut p = Self::zero(dim);
        for (a, c) in terms {
            assert_eq!(a.len(), dim, "multi-index length");
            p.add_term(a, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &T)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, alpha: &[u32]) -> T {
        self.terms.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(alpha) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|a| multi_index::degree(a)).max()
    }

    pub fn is_homogeneous(&self, m: u32) -> bool {
        self.terms.keys().all(|a| multi_index::degree(a) == m)
    }

    pub fn homogeneous_part(&self, m: u32) -> Self {
        MultiPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| multi_index::degree(a) == m)
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return Self::zero(self.dim);
        }
        MultiPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c.clone() * s.clone())).collect(),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MultiPoly<U> {
        MultiPoly::from_terms(self.dim, self.terms.iter().map(|(a, c)| (a.clone(), f(c))))
    }

    pub fn to_f64(&self) -> FloatPoly {
        self.map(|c| c.to_f64())
    }

    pub fn derivative(&self, j: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            if a[j] == 0 {
                continue;
            }
            let mut b = a.clone();
            b[j] -= 1;
            out.add_term(b, c.clone() * T::from_i64(a[j] as i64));
        }
        out
    }

    /// `partial^alpha p`.
    pub fn derivative_multi(&self, alpha: &[u32]) -> Self {
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            if !multi_index::le(alpha, a) {
                continue;
            }
            let mut factor = T::one();
            let mut b = a.clone();
            for j in 0..self.dim {
                for t in 0..alpha[j] {
                    factor = factor * T::from_i64((a[j] - t) as i64);
                }
                b[j] -= alpha[j];
            }
            out.add_term(b, c.clone() * factor);
        }
        out
    }

    /// `partial^alpha p (0) = alpha! p_alpha`.
    pub fn derivative_at_zero(&self, alpha: &[u32]) -> T {
        let c = self.coeff(alpha);
        alpha.iter().fold(c, |acc, &a| acc * factorial::<T>(a))
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for j in 0..self.dim {
            out = &out + &self.derivative(j).derivative(j);
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (a, c) in &self.terms {
            let mut t = c.clone();
            for (xj, &aj) in x.iter().zip(a) {
                t = t * pow(xj, aj);
            }
            acc = acc + t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| c.to_f64() * a.iter().zip(x).map(|(&k, &xj)| xj.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// `x -> p(x + s e_j)` for an integer shift.
    pub fn shift(&self, j: usize, s: i64) -> Self {
        let mut out = Self::zero(self.dim);
        let st = T::from_i64(s);
        for (a, c) in &self.terms {
            let n = a[j];
            // (x + s)^n = sum_l C(n, l) s^{n - l} x^l
            let mut binom = T::one();
            for l in (0..=n).rev() {
                let mut b = a.clone();
                b[j] = l;
                out.add_term(b, c.clone() * binom.clone() * pow(&st, n - l));
                if l > 0 {
                    binom = binom * T::from_i64(l as i64) / T::from_i64((n - l + 1) as i64);
                }
            }
        }
        out
    }

    /// Forward difference `p(x + e_j) - p(x)`.
    pub fn forward_difference(&self, j: usize) -> Self {
        &self.shift(j, 1) - self
    }

    /// `D^alpha p`.
    pub fn forward_difference_multi(&self, alpha: &[u32]) -> Self {
        let mut p = self.clone();
        for (j, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                p = p.forward_difference(j);
            }
        }
        p
    }

    /// Substitution `x -> M x` with `M` given by rows.
    pub fn linear_substitute(&self, m: &[Vec<T>]) -> Self {
        let lin: Vec<Self> = (0..self.dim)
            .map(|i| Self::from_terms(self.dim, (0..self.dim).map(|j| (multi_index::unit(self.dim, j), m[i][j].clone()))))
            .collect();
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            let mut t = Self::constant(self.dim, c.clone());
            for (i, &ai) in a.iter().enumerate() {
                for _ in 0..ai {
                    t = &t * &lin[i];
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

impl<T: Scalar> Add for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn add(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn sub(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.add_term(a.clone(), -c.clone());
        }
        out
    }
}

impl<T: Scalar> Neg for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn neg(self) -> MultiPoly<T> {
        self.scale(&(-T::one()))
    }
}

impl<T: Scalar> Mul for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn mul(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut acc: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for (a, c) in &self.terms {
            for (b, d) in &rhs.terms {
                let k = multi_index::add(a, b);
                let slot = acc.entry(k).or_insert_with(T::zero);
                *slot = slot.clone() + c.clone() * d.clone();
            }
        }
        acc.retain(|_, v| !v.is_zero());
        MultiPoly {
            dim: self.dim,
            terms: acc,
        }
    }
}
