//! Solutions of the homogenized heat equation `d_t Q = abar : grad^2 Q`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::langevin::{normal_cdf, normal_pdf, Histogram};
use crate::multi_index;
use crate::poly::FloatPoly;

/// `mass * N(mean, cov0 + 2 abar t)` in any dimension, with derivatives of
/// every order in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianQbar {
    pub mass: f64,
    pub mean: Vec<f64>,
    pub cov0: DMatrix<f64>,
    pub abar: DMatrix<f64>,
}

impl GaussianQbar {
    /// Heat kernel started at time `-t_shift`, so that its covariance at
    /// time `t` is `2 abar (t + t_shift)`.
    pub fn heat_kernel(abar: &DMatrix<f64>, t_shift: f64) -> Self {
        let d = abar.nrows();
        GaussianQbar {
            mass: 1.0,
            mean: vec![0.0; d],
            cov0: abar * (2.0 * t_shift),
            abar: abar.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        GaussianQbar {
            mass: self.mass * s,
            ..self.clone()
        }
    }

    pub fn covariance(&self, t: f64) -> DMatrix<f64> {
        &self.cov0 + &self.abar * (2.0 * t)
    }

    /// `d^alpha Q(t, x)` for every `alpha` of degree at most `order`.
    pub fn derivatives(&self, t: f64, x: &[f64], order: u32) -> BTreeMap<Vec<u32>, f64> {
        let d = self.dim();
        let s = self.covariance(t);
        let p = s.clone().try_inverse().expect("covariance is positive definite");
        let det = s.determinant();
        let dx: Vec<f64> = (0..d).map(|i| x[i] - self.mean[i]).collect();
        let y: Vec<f64> = (0..d).map(|i| (0..d).map(|j| p[(i, j)] * dx[j]).sum()).collect();
        let quad: f64 = (0..d).map(|i| dx[i] * y[i]).sum();
        let g = self.mass * (-0.5 * quad).exp() / ((std::f64::consts::TAU).powi(d as i32) * det).sqrt();
        // d^alpha G = p_alpha(y) G with y = P (x - mean) and d_j y_i = P_ij
        let mut polys: BTreeMap<Vec<u32>, FloatPoly> = BTreeMap::new();
        polys.insert(vec![0; d], FloatPoly::constant(d, 1.0));
        let mut out = BTreeMap::new();
        out.insert(vec![0; d], g);
        for level in 1..=order {
            for alpha in multi_index::of_degree(d, level) {
                let j = (0..d).find(|&j| alpha[j] > 0).expect("level >= 1");
                let lower = multi_index::lower(&alpha, j).expect("alpha_j > 0");
                let pl = &polys[&lower];
                let mut next = &FloatPoly::var(d, j) * pl;
                next = -&next;
                for i in 0..d {
                    if p[(i, j)] != 0.0 {
                        next = &next + &pl.derivative(i).scale(&p[(i, j)]);
                    }
                }
                out.insert(alpha.clone(), g * next.eval_f64(&y));
                polys.insert(alpha, next);
            }
        }
        out
    }

    /// `d_t d^alpha Q` through the heat equation, for `|alpha| <= order`.
    pub fn time_derivatives(&self, t: f64, x: &[f64], order: u32) -> BTreeMap<Vec<u32>, f64> {
        let d = self.dim();
        let all = self.derivatives(t, x, order + 2);
        multi_index::up_to_degree(d, order)
            .into_iter()
            .map(|alpha| {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        let mut b = alpha.clone();
                        b[k] += 1;
                        b[l] += 1;
                        s += self.abar[(k, l)] * all[&b];
                    }
                }
                (alpha, s)
            })
            .collect()
    }
}

/// One piece of initial data: uniform mass on `[lo, hi]`, or a point mass
/// when `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// One-dimensional `Q` started at `t0` from piecewise-uniform data and
/// evolved by exact Gaussian convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistQbar {
    pub abar: f64,
    pub t0: f64,
    pub atoms: Vec<Atom>,
}

/// `int_{-inf}^u Phi(w / s) dw`.
fn phi_integral(u: f64, s: f64) -> f64 {
    u * normal_cdf(u, s * s) + s * s * normal_pdf(u, s * s)
}

/// `d^k/dx^k` of the centred normal density with variance `var`.
fn normal_pdf_derivative(x: f64, var: f64, k: u32) -> f64 {
    let s = var.sqrt();
    let u = x / s;
    // probabilists' Hermite recursion
    let (mut h0, mut h1) = (1.0, u);
    let he = match k {
        0 => h0,
        _ => {
            for n in 1..k {
                let h2 = u * h1 - n as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    };
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * he * normal_pdf(x, var) / s.powi(k as i32)
}

impl HistQbar {
    pub fn point(abar: f64, t0: f64) -> Self {
        HistQbar {
            abar,
            t0,
            atoms: vec![Atom { lo: 0.0, hi: 0.0, mass: 1.0 }],
        }
    }

    /// Data from the in-range bins of `h`, normalized to unit mass.
    pub fn from_histogram(h: &Histogram, abar: f64, t0: f64) -> Self {
        let inside: u64 = h.counts.iter().sum();
        let n = inside.max(1) as f64;
        let w = h.width();
        let atoms = h
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| Atom {
                lo: h.lo + i as f64 * w,
                hi: h.lo + (i + 1) as f64 * w,
                mass: c as f64 / n,
            })
            .collect();
        HistQbar { abar, t0, atoms }
    }

    fn var_at(&self, t: f64) -> f64 {
        assert!(t > self.t0, "evaluation time must follow the data time");
        2.0 * self.abar * (t - self.t0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass * 0.5 * (a.lo + a.hi)).sum::<f64>() / self.total_mass()
    }

    /// Variance of the data plus `2 abar (t - t0)`.
    pub fn variance(&self, t: f64) -> f64 {
        let m = self.mean();
        let data: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let c = 0.5 * (a.lo + a.hi) - m;
                a.mass * (c * c + (a.hi - a.lo).powi(2) / 12.0)
            })
            .sum::<f64>()
            / self.total_mass();
        data + 2.0 * self.abar * (t - self.t0)
    }

    /// `d^k Q(t, x) / dx^k`.
    pub fn derivative(&self, t: f64, x: f64, k: u32) -> f64 {
        let var = self.var_at(t);
        self.atoms
            .iter()
            .map(|a| {
                if a.hi == a.lo {
                    a.mass * normal_pdf_derivative(x - a.lo, var, k)
                } else if k == 0 {
                    a.mass * (normal_cdf(x - a.lo, var) - normal_cdf(x - a.hi, var)) / (a.hi - a.lo)
                } else {
                    a.mass * (normal_pdf_derivative(x - a.lo, var, k - 1) - normal_pdf_derivative(x - a.hi, var, k - 1)) / (a.hi - a.lo)
                }
            })
            .sum()
    }

    pub fn density(&self, t: f64, x: f64) -> f64 {
        self.derivative(t, x, 0)
    }

    /// Mass of `Q(t, .)` on `[a, b]`.
    pub fn cell_mass(&self, t: f64, a: f64, b: f64) -> f64 {
        let var = self.var_at(t);
        let s = var.sqrt();
        self.atoms
            .iter()
            .map(|at| {
                if at.hi == at.lo {
                    at.mass * (normal_cdf(b - at.lo, var) - normal_cdf(a - at.lo, var))
                } else {
                    let w = at.hi - at.lo;
                    at.mass
                        * (phi_integral(b - at.lo, s) - phi_integral(b - at.hi, s) - phi_integral(a - at.lo, s)
                            + phi_integral(a - at.hi, s))
                        / w
                }
            })
            .sum()
    }
}

/// Gaussian-envelope bounds `t^{k/2} |d^k Q(t, z)| <= C_k Gamma_c(t, z)`
/// where `Gamma_c(t, .)` is the centred normal density of variance `2 c t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    pub c: f64,
    /// Fitted `C_k` for `k = 0..=3`.
    pub constants: Vec<f64>,
}

/// Fits `c = 2 max_t Var(Q(t)) / (2 t)` and then the smallest `C_k` that
/// makes the bound hold on `times x grid`.
pub fn qbar_derivative_bounds(q: &HistQbar, times: &[f64], grid: &[f64]) -> DerivativeBounds {
    let c = 2.0 * times.iter().map(|&t| q.variance(t) / (2.0 * t)).fold(0.0, f64::max);
    let constants = (0..=3u32)
        .map(|k| {
            let mut best: f64 = 0.0;
            for &t in times {
                for &z in grid {
                    let env = normal_pdf(z, 2.0 * c * t);
                    best = best.max(t.powf(0.5 * k as f64) * q.derivative(t, z, k).abs() / env);
                }
            }
            best
        })
        .collect();
    DerivativeBounds { c, constants }
}
