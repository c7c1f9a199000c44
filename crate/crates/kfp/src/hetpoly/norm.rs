//! `L^2(Q_r; L^2_gamma)` norms by Hermite Parseval in velocity and
//! Gauss-Legendre quadrature on each lattice cell.

use rayon::prelude::*;

use super::{hermite_cut, HetPoly};
use crate::cell::CorrectorSet;
use crate::multi_index;
use crate::poly::FloatPoly;
use crate::quad::gauss_legendre;
use crate::spectral::Layout;

/// Corrector values at the quadrature nodes of one unit cell. The correctors
/// are periodic, so the table for a cell starting at `o` serves every cell
/// starting at `o + Z^d`.
struct OffsetTable {
    /// Per node, per index, Hermite coefficients.
    values: Vec<Vec<Vec<f64>>>,
}

/// Precomputed cell quadrature for heterogeneous polynomials of bounded degree.
pub struct CellQuadrature {
    dim: usize,
    degree: u32,
    n_herm: usize,
    alphas: Vec<Vec<u32>>,
    /// Nodes in `[0, 1]^d` and their weights.
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// Cell origins with fractional part 0 and 1/2.
    tables: [OffsetTable; 2],
}

impl CellQuadrature {
    /// `nodes = None` uses four times the Fourier cut plus room for the
    /// polynomial factor.
    pub fn new(cset: &CorrectorSet, degree: u32, nodes: Option<usize>) -> Self {
        let d = cset.dim();
        let nx = cset.options().nx;
        let n1 = nodes.unwrap_or_else(|| {
            let n = 4 * nx + 2 * degree as usize + 4;
            match d {
                1 => n,
                2 => n.min(40),
                _ => n.min(16),
            }
        });
        let rule = gauss_legendre(n1).mapped(0.0, 1.0);
        let total = n1.pow(d as u32);
        let mut pts = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut r = flat;
            let mut x = Vec::with_capacity(d);
            let mut w = 1.0;
            for _ in 0..d {
                x.push(rule.nodes[r % n1]);
                w *= rule.weights[r % n1];
                r /= n1;
            }
            pts.push(x);
            weights.push(w);
        }
        let alphas = multi_index::up_to_degree(d, degree);
        let n_herm = Layout::new(d, 0, hermite_cut(cset, degree)).n_herm();
        let table = |offset: f64| OffsetTable {
            values: pts
                .par_iter()
                .map(|s| {
                    let x: Vec<f64> = s.iter().map(|c| c + offset).collect();
                    alphas
                        .iter()
                        .map(|alpha| {
                            if multi_index::degree(alpha) == 0 {
                                vec![1.0]
                            } else {
                                cset.corrector(alpha).expect("order checked").local(&x).0
                            }
                        })
                        .collect()
                })
                .collect(),
        };
        CellQuadrature {
            dim: d,
            degree,
            n_herm,
            tables: [table(0.0), table(0.5)],
            alphas,
            nodes: pts,
            weights,
        }
    }

    /// Normalized `||psi||_{L^2(Q_r; L^2_gamma)}` for the heterogeneous
    /// polynomial with base `base`. `r` must be a positive integer so that
    /// `Q_r` is a union of unit cells.
    pub fn norm(&self, base: &FloatPoly, r: usize) -> f64 {
        assert!(r >= 1, "radius must be positive");
        assert!(base.degree().unwrap_or(0) <= self.degree, "base degree exceeds the quadrature degree");
        let d = self.dim;
        let table = &self.tables[r % 2];
        let derivs: Vec<(usize, FloatPoly)> = self
            .alphas
            .iter()
            .enumerate()
            .map(|(i, a)| (i, base.derivative_multi(a)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        let half = r as f64 / 2.0;
        let cells = r.pow(d as u32);
        let per_cell: Vec<f64> = (0..cells)
            .into_par_iter()
            .map(|flat| {
                let mut origin = vec![0.0; d];
                let mut rem = flat;
                for o in origin.iter_mut() {
                    *o = (rem % r) as f64 - half;
                    rem /= r;
                }
                let mut coeffs = vec![0.0; self.n_herm];
                let mut acc = 0.0;
                let mut y = vec![0.0; d];
                for (g, s) in self.nodes.iter().enumerate() {
                    for j in 0..d {
                        y[j] = origin[j] + s[j];
                    }
                    coeffs.iter_mut().for_each(|c| *c = 0.0);
                    for (i, p) in &derivs {
                        let pv = p.eval_f64(&y);
                        for (c, t) in coeffs.iter_mut().zip(&table.values[g][*i]) {
                            *c += pv * t;
                        }
                    }
                    acc += self.weights[g] * coeffs.iter().map(|c| c * c).sum::<f64>();
                }
                acc
            })
            .collect();
        // Summed in cell order so the result does not depend on the thread count.
        let total: f64 = per_cell.iter().sum();
        (total / cells as f64).sqrt()
    }
}

/// `|grad^n p(0)|`: Frobenius norm of the symmetric derivative tensor.
pub fn gradient_norm(p: &FloatPoly, n: u32) -> f64 {
    multi_index::of_degree(p.dim(), n)
        .iter()
        .map(|a| {
            let mult = multi_index::factorial_f64(&[n]) / multi_index::factorial_f64(a);
            mult * p.derivative_at_zero(a).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Smallest `C` with `||psi||_{Q_r} <= sum_n (C r / (n + 3))^{n + 2} |grad^n p(0)|`
/// at every listed radius.
pub fn norm_bound_constant(psi: &HetPoly, p: &FloatPoly, radii: &[usize]) -> f64 {
    let deg = p.degree().unwrap_or(0);
    let grads: Vec<f64> = (0..=deg).map(|n| gradient_norm(p, n)).collect();
    let quad = CellQuadrature::new(psi.correctors(), psi.degree(), None);
    let rhs = |c: f64, r: f64| -> f64 {
        grads
            .iter()
            .enumerate()
            .map(|(n, g)| (c * r / (n as f64 + 3.0)).powi(n as i32 + 2) * g)
            .sum()
    };
    radii
        .iter()
        .map(|&r| {
            let lhs = quad.norm(psi.base(), r);
            let (mut lo, mut hi) = (0.0, 1.0);
            while rhs(hi, r as f64) < lhs {
                hi *= 2.0;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if rhs(mid, r as f64) < lhs {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        })
        .fold(0.0, f64::max)
}
