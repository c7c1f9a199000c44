//! Numerical checks of polynomial inequalities against the heat kernel
//! `G_t(x) = (4 pi t)^{-d/2} exp(-|x|^2 / 4t)` and against lattice differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::multipoly::{FloatPoly, RatPoly};
use super::newton::{newton_coefficients, newton_poly, random_poly};
use super::scalar::Scalar;
use crate::multi_index;
use crate::quad::gauss_legendre;

/// `E[x^n]` for a centred normal of variance `var`.
fn normal_moment(n: u32, var: f64) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    (1..n).step_by(2).fold(1.0, |acc, k| acc * k as f64 * var)
}

/// `E[x^n; |x| > h]` for a centred normal of variance `var`.
fn normal_tail_moment(n: u32, var: f64, h: f64) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let density = (-h * h / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let mut t = libm::erfc(h / (2.0 * var).sqrt());
    let mut k = 2;
    while k <= n {
        t = (k - 1) as f64 * var * t + 2.0 * var * h.powi(k as i32 - 1) * density;
        k += 2;
    }
    t
}

/// `int p G_t`.
pub fn heat_expectation(p: &FloatPoly, t: f64) -> f64 {
    let var = 2.0 * t;
    p.terms()
        .map(|(a, c)| c * a.iter().map(|&k| normal_moment(k, var)).product::<f64>())
        .sum()
}

/// `int p G_t` over the complement of the cube `(-h, h)^d`.
pub fn heat_tail(p: &FloatPoly, t: f64, h: f64) -> f64 {
    let var = 2.0 * t;
    let d = p.dim();
    p.terms()
        .map(|(a, c)| {
            // inclusion-exclusion over the set of coordinates outside the slab
            let mut acc = 0.0;
            for mask in 1u32..(1 << d) {
                let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                let prod: f64 = (0..d)
                    .map(|i| {
                        if mask & (1 << i) != 0 {
                            normal_tail_moment(a[i], var, h)
                        } else {
                            normal_moment(a[i], var)
                        }
                    })
                    .product();
                acc += sign * prod;
            }
            c * acc
        })
        .sum()
}

/// `int |grad(p G_t) / G_t|^2 G_t  /  (2(m+d)/t int p^2 G_t)`; at most one.
pub fn gradient_bound_ratio(p: &FloatPoly, t: f64) -> f64 {
    let d = p.dim();
    let m = p.degree().unwrap_or(0) as f64;
    let mut lhs = FloatPoly::zero(d);
    for i in 0..d {
        let g = &p.derivative(i) - &(&FloatPoly::var(d, i) * p).scale(&(1.0 / (2.0 * t)));
        lhs = &lhs + &(&g * &g);
    }
    let rhs = 2.0 * (m + d as f64) / t * heat_expectation(&(p * p), t);
    heat_expectation(&lhs, t) / rhs
}

/// `(int p^2 G_t outside (-r, r)^d) / (int p^2 G_t)` times `exp(r^2/16t)`; at most one
/// once `r^2 >= 64 m t`.
pub fn tail_bound_ratio(p: &FloatPoly, t: f64, r: f64) -> f64 {
    let sq = p * p;
    let tail = heat_tail(&sq, t, r).max(0.0);
    (tail / heat_expectation(&sq, t)) * (r * r / (16.0 * t)).exp()
}

/// Smallest `C` with `int |grad p|^2 G_t <= C m / t int p^2 G_t`.
pub fn markov_constant(p: &FloatPoly, t: f64) -> f64 {
    let d = p.dim();
    let m = p.degree().unwrap_or(0).max(1) as f64;
    let mut grad_sq = FloatPoly::zero(d);
    for i in 0..d {
        let g = p.derivative(i);
        grad_sq = &grad_sq + &(&g * &g);
    }
    heat_expectation(&grad_sq, t) * t / (m * heat_expectation(&(p * p), t))
}

/// Worst ratio of `|d^beta p(0)|` to `sum_alpha binom(alpha, beta) |D^alpha p(0)|`; at most one.
pub fn derivative_difference_ratio(p: &RatPoly) -> f64 {
    let coeffs = newton_coefficients(p);
    let deg = p.degree().unwrap_or(0);
    let mut worst: f64 = 0.0;
    for beta in multi_index::up_to_degree(p.dim(), deg) {
        let lhs = p.derivative_at_zero(&beta).magnitude();
        let rhs: f64 = coeffs
            .iter()
            .filter(|(a, _)| multi_index::le(&beta, a))
            .map(|(a, c)| multi_index::binomial_f64(a, &beta) * c.magnitude())
            .sum();
        if lhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    worst
}

/// `(||p||_{L^inf(Q_{r2})} / ||p||_{avg L^2(Q_{r1})})^{1/m} r1 / r2`.
pub fn linf_l2_constant(p: &FloatPoly, r1: f64, r2: f64, grid: usize) -> f64 {
    let d = p.dim();
    let m = p.degree().unwrap_or(0).max(1);
    let rule = gauss_legendre(m as usize + 2).mapped(-r1 / 2.0, r1 / 2.0);
    let n = rule.nodes.len();
    let mut l2 = 0.0;
    let mut x = vec![0.0; d];
    for flat in 0..n.pow(d as u32) {
        let mut rem = flat;
        let mut w = 1.0;
        for xk in x.iter_mut() {
            *xk = rule.nodes[rem % n];
            w *= rule.weights[rem % n] / r1;
            rem /= n;
        }
        l2 += w * p.eval_f64(&x).powi(2);
    }
    let mut sup: f64 = 0.0;
    for flat in 0..grid.pow(d as u32) {
        let mut rem = flat;
        for xk in x.iter_mut() {
            let s = (rem % grid) as f64 / (grid - 1) as f64;
            *xk = r2 * (s - 0.5);
            rem /= grid;
        }
        sup = sup.max(p.eval_f64(&x).abs());
    }
    (sup / l2.sqrt()).powf(1.0 / m as f64) * r1 / r2
}

#[derive(Clone, Debug)]
pub struct EstimateCheck {
    pub name: &'static str,
    /// Worst observed constant.
    pub observed: f64,
    /// Explicit constant it must not exceed, when there is one.
    pub bound: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub checks: Vec<EstimateCheck>,
}

impl EstimateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&EstimateCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct EstimateConfig {
    pub trials: usize,
    pub max_degree: u32,
    pub max_dim: usize,
    pub seed: u64,
    /// Relative slack allowed on explicit constants for rounding.
    pub tol: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            trials: 40,
            max_degree: 6,
            max_dim: 3,
            seed: 7,
            tol: 1e-9,
        }
    }
}

fn random_float_poly(dim: usize, deg: u32, rng: &mut impl Rng) -> FloatPoly {
    FloatPoly::from_terms(
        dim,
        multi_index::up_to_degree(dim, deg)
            .into_iter()
            .map(|a| (a, rng.sample::<f64, _>(StandardNormal))),
    )
}

/// Evaluates every inequality on random polynomials and reports the worst
/// constant seen.
pub fn poly_estimate_suite(cfg: &EstimateConfig) -> EstimateReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grad: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let mut markov: f64 = 0.0;
    let mut diff: f64 = 0.0;
    let mut linf: f64 = 0.0;
    let mut finite = true;
    for trial in 0..cfg.trials {
        let d = 1 + trial % cfg.max_dim;
        let m = 1 + (trial / cfg.max_dim) as u32 % cfg.max_degree;
        let t = 0.25 * 16f64.powf(rng.random::<f64>());
        let p = random_float_poly(d, m, &mut rng);
        grad = grad.max(gradient_bound_ratio(&p, t));
        for scale in [1.0, 1.5] {
            let r = scale * (64.0 * m as f64 * t).sqrt();
            tail = tail.max(tail_bound_ratio(&p, t, r));
        }
        markov = markov.max(markov_constant(&p, t));
        let q = random_poly(d, m, &mut rng);
        diff = diff.max(derivative_difference_ratio(&q));
        let n = newton_poly(&multi_index::of_degree(d, m)[0]);
        diff = diff.max(derivative_difference_ratio(&n));
        let r1 = 2.0 * m as f64;
        let grid = if d == 3 { 17 } else { 41 };
        for r2 in [r1, 2.0 * r1] {
            linf = linf.max(linf_l2_constant(&p, r1, r2, grid));
        }
        finite &= [grad, tail, markov, diff, linf].iter().all(|v| v.is_finite());
    }
    let limit = 1.0 + cfg.tol;
    EstimateReport {
        checks: vec![
            EstimateCheck {
                name: "heat_gradient",
                observed: 2.0 * grad,
                bound: Some(2.0),
                passed: grad <= limit,
            },
            EstimateCheck {
                name: "tail_cutoff",
                observed: tail,
                bound: Some(1.0),
                passed: tail <= limit,
            },
            EstimateCheck {
                name: "markov",
                observed: markov,
                bound: None,
                passed: markov.is_finite(),
            },
            EstimateCheck {
                name: "derivative_vs_difference",
                observed: diff,
                bound: Some(1.0),
                passed: diff <= limit,
            },
            EstimateCheck {
                name: "sup_vs_mean_square",
                observed: linf,
                bound: None,
                passed: finite && linf.is_finite(),
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_moments_sum_to_full() {
        let var = 0.7;
        for n in [0, 2, 4, 6] {
            let full = normal_moment(n, var);
            let at_zero = normal_tail_moment(n, var, 0.0);
            assert!((full - at_zero).abs() < 1e-14 * full.max(1.0));
        }
    }

    #[test]
    fn constant_gradient_bound_has_slack_four() {
        for d in 1..=3 {
            let p = FloatPoly::constant(d, 1.0);
            assert!((gradient_bound_ratio(&p, 0.3) - 0.25).abs() < 1e-14);
        }
    }
}
