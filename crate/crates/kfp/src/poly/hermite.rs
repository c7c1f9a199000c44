//! Physicist Hermite polynomials `h_alpha = (-1)^|alpha| G^{-1} d^alpha G`
//! for the Gaussian weight `G(x) = pi^{-d/2} exp(-|x|^2)`.

use super::multipoly::{MultiPoly, RatPoly};
use super::scalar::{factorial, pow, rat, Rational, Scalar};
use crate::multi_index;
use crate::quad::gauss_hermite;

/// `h_alpha` from the definition: apply `-(d_i - 2 x_i)` to `1`, `alpha_i` times.
pub fn hermite_direct(alpha: &[u32]) -> RatPoly {
    let d = alpha.len();
    let mut p = RatPoly::constant(d, rat(1, 1));
    for (i, &a) in alpha.iter().enumerate() {
        let two_x = RatPoly::var(d, i).scale(&rat(2, 1));
        for _ in 0..a {
            p = &(&two_x * &p) - &p.derivative(i);
        }
    }
    p
}

/// `h_alpha` from `h_{alpha+e_i} = 2 x_i h_alpha - 2 alpha_i h_{alpha-e_i}`.
pub fn hermite_poly(alpha: &[u32]) -> RatPoly {
    let d = alpha.len();
    let mut p = RatPoly::constant(d, rat(1, 1));
    for (i, &a) in alpha.iter().enumerate() {
        // run the one-dimensional recurrence in x_i, carrying the earlier factors
        let mut prev = RatPoly::zero(d);
        let mut cur = p.clone();
        let two_x = RatPoly::var(d, i).scale(&rat(2, 1));
        for n in 0..a {
            let next = &(&two_x * &cur) - &prev.scale(&rat(2 * n as i64, 1));
            prev = cur;
            cur = next;
        }
        p = cur;
    }
    p
}

/// `int x^alpha G(x) dx`, exactly.
pub fn gaussian_moment(alpha: &[u32]) -> Rational {
    alpha.iter().fold(rat(1, 1), |acc, &a| {
        if a % 2 == 1 {
            rat(0, 1)
        } else {
            // (a - 1)!! / 2^{a/2}
            let dfact = (1..a).step_by(2).fold(rat(1, 1), |f, k| f * rat(k as i64, 1));
            acc * dfact / pow(&rat(2, 1), a / 2)
        }
    })
}

/// `int p G`, exactly.
pub fn gaussian_expectation(p: &RatPoly) -> Rational {
    p.terms().fold(rat(0, 1), |acc, (a, c)| acc + c.clone() * gaussian_moment(a))
}

/// `2^|alpha| alpha!`.
pub fn hermite_norm_sq(alpha: &[u32]) -> Rational {
    alpha
        .iter()
        .fold(pow(&rat(2, 1), multi_index::degree(alpha)), |acc, &a| acc * factorial::<Rational>(a))
}

#[derive(Clone, Debug)]
pub struct HermiteReport {
    pub max_degree: u32,
    pub dim: usize,
    /// Recurrence and direct definition agree for every index.
    pub recurrence_matches: bool,
    /// Exact moment computation gives `2^|a| a! 1_{a=b}`.
    pub exact_orthogonality: bool,
    /// Largest deviation of tensor Gauss-Hermite quadrature from the exact Gram matrix.
    pub quadrature_error: f64,
}

impl HermiteReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.recurrence_matches && self.exact_orthogonality && self.quadrature_error <= tol
    }
}

/// Checks the definition, recurrence and orthogonality of all `h_alpha` with
/// `|alpha| <= max_degree` in dimension `dim`.
pub fn hermite_checks(dim: usize, max_degree: u32) -> HermiteReport {
    let idx = multi_index::up_to_degree(dim, max_degree);
    let polys: Vec<RatPoly> = idx.iter().map(|a| hermite_poly(a)).collect();
    let recurrence_matches = idx.iter().zip(&polys).all(|(a, p)| hermite_direct(a) == *p);

    let npts = max_degree as usize + 1;
    let rule = gauss_hermite(npts);
    let norm = std::f64::consts::PI.sqrt();
    let floats: Vec<MultiPoly<f64>> = polys.iter().map(|p| p.to_f64()).collect();
    let total = npts.pow(dim as u32);
    let mut exact_orthogonality = true;
    let mut quadrature_error: f64 = 0.0;
    for (i, a) in idx.iter().enumerate() {
        for (j, b) in idx.iter().enumerate().skip(i) {
            let exact = gaussian_expectation(&(&polys[i] * &polys[j]));
            let expect = if a == b { hermite_norm_sq(a) } else { rat(0, 1) };
            exact_orthogonality &= exact == expect;
            let mut q = 0.0;
            let mut x = vec![0.0; dim];
            for flat in 0..total {
                let mut rem = flat;
                let mut w = 1.0;
                for xk in x.iter_mut() {
                    let n = rem % npts;
                    rem /= npts;
                    *xk = rule.nodes[n];
                    w *= rule.weights[n] / norm;
                }
                q += w * floats[i].eval_f64(&x) * floats[j].eval_f64(&x);
            }
            let scale = expect.to_f64().max(1.0);
            quadrature_error = quadrature_error.max((q - expect.to_f64()).abs() / scale);
        }
    }
    HermiteReport {
        max_degree,
        dim,
        recurrence_matches,
        exact_orthogonality,
        quadrature_error,
    }
}
