//! Newton polynomials `N_k(x) = prod_{j<k} (x - j) / k!` and their
//! forward-difference duality.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::multipoly::RatPoly;
use super::scalar::{factorial, rat, Rational, Scalar};
use crate::multi_index;

pub fn newton_1d(dim: usize, j: usize, k: u32) -> RatPoly {
    let x = RatPoly::var(dim, j);
    let mut p = RatPoly::constant(dim, rat(1, 1));
    for s in 0..k {
        p = &p * &(&x - &RatPoly::constant(dim, rat(s as i64, 1)));
    }
    p.scale(&(rat(1, 1) / factorial::<Rational>(k)))
}

/// `N_alpha(x) = prod_i N_{alpha_i}(x_i)`.
pub fn newton_poly(alpha: &[u32]) -> RatPoly {
    let d = alpha.len();
    alpha
        .iter()
        .enumerate()
        .fold(RatPoly::constant(d, rat(1, 1)), |acc, (j, &k)| &acc * &newton_1d(d, j, k))
}

/// Coefficients `D^alpha p(0)` of `p` in the Newton basis.
pub fn newton_coefficients(p: &RatPoly) -> Vec<(Vec<u32>, Rational)> {
    let deg = p.degree().unwrap_or(0);
    let zero = vec![rat(0, 1); p.dim()];
    multi_index::up_to_degree(p.dim(), deg)
        .into_iter()
        .map(|a| {
            let c = p.forward_difference_multi(&a).eval(&zero);
            (a, c)
        })
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

pub fn from_newton(dim: usize, coeffs: &[(Vec<u32>, Rational)]) -> RatPoly {
    coeffs
        .iter()
        .fold(RatPoly::zero(dim), |acc, (a, c)| &acc + &newton_poly(a).scale(c))
}

/// A random polynomial with small integer-ratio coefficients.
pub fn random_poly(dim: usize, deg: u32, rng: &mut impl Rng) -> RatPoly {
    RatPoly::from_terms(
        dim,
        multi_index::up_to_degree(dim, deg)
            .into_iter()
            .map(|a| (a, rat(rng.random_range(-9..=9), rng.random_range(1..=7)))),
    )
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    /// `D N_k = N_{k-1}` for every checked `k`.
    pub difference_duality: bool,
    /// Newton expansion reproduces random polynomials exactly.
    pub representation_exact: bool,
    /// `|d^j N_k(0)| <= binom(k, j)` for every checked `j <= k`.
    pub binomial_bound: bool,
}

impl NewtonReport {
    pub fn passed(&self) -> bool {
        self.difference_duality && self.representation_exact && self.binomial_bound
    }
}

/// Symbolic checks for `k <= max_k` plus `trials` random polynomials of
/// degree `deg` in dimension `dim`.
pub fn newton_checks(max_k: u32, dim: usize, deg: u32, trials: usize, seed: u64) -> NewtonReport {
    let mut difference_duality = true;
    let mut binomial_bound = true;
    for k in 0..=max_k {
        let n = newton_1d(1, 0, k);
        let lower = if k == 0 { RatPoly::zero(1) } else { newton_1d(1, 0, k - 1) };
        difference_duality &= n.forward_difference(0) == lower;
        for j in 0..=k {
            let dj = n.derivative_at_zero(&[j]);
            let bound = multi_index::binomial_f64(&[k], &[j]);
            binomial_bound &= dj.magnitude() <= bound * (1.0 + 1e-12);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut representation_exact = true;
    for _ in 0..trials {
        let p = random_poly(dim, deg, &mut rng);
        representation_exact &= from_newton(dim, &newton_coefficients(&p)) == p;
    }
    NewtonReport {
        difference_duality,
        representation_exact,
        binomial_bound,
    }
}
