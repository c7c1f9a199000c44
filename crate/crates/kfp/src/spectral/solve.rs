//! Mean-zero cell-problem solves with constant-mode deflation.

use nalgebra::{DMatrix, DVector, LU, Dyn};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::Arc;

use super::field::PhaseField;
use super::gmres::{gmres, GmresConfig};
use super::layout::{Layout, MAX_DIM};
use super::model::{FourierTable, Model};
use super::operator::KfpOperator;
use super::SpectralError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerances for [`CellSolver::solve_mean_zero`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// Largest admissible `|<rhs>_m|` relative to `max(1, ||rhs||)`.
    pub compat_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 3000,
            restart: 120,
            compat_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// `||L u - rhs|| / ||rhs||` of the returned solution.
    pub residual: f64,
    /// `<rhs>_m` before the solve.
    pub rhs_mean: f64,
}

enum Block {
    Lu(LU<Complex64, Dyn, Dyn>),
    /// Solve with the conjugate of the block stored at this mode.
    Conj(usize),
    Diagonal(Vec<Complex64>),
}

/// Block-diagonal preconditioner: per Fourier mode, the inverse of the
/// constant-coefficient part (mean friction number operator plus transport).
struct BlockPreconditioner {
    nh: usize,
    blocks: Vec<Block>,
}

const DENSE_LIMIT: f64 = 4e9;

impl BlockPreconditioner {
    fn new(model: &Model, layout: &Layout) -> Self {
        let dim = layout.dim();
        let nh = layout.n_herm();
        let a = model.friction.mean();
        let zero = layout.zero_mode();
        let dense = (nh as f64).powi(3) * layout.n_modes() as f64 / 2.0 <= DENSE_LIMIT;
        let mut blocks = Vec::with_capacity(layout.n_modes());
        for (mi, k) in layout.modes().iter().enumerate() {
            let mk = layout.mode_pos(&[-k[0], -k[1], -k[2]]).expect("symmetric cut");
            if dense && mk < mi {
                blocks.push(Block::Conj(mk));
                continue;
            }
            let mut b = DMatrix::<Complex64>::zeros(nh, nh);
            for (h, n) in layout.hermite().iter().enumerate() {
                let n64 = [n[0] as i64, n[1] as i64, n[2] as i64];
                for i in 0..dim {
                    if n64[i] == 0 {
                        continue;
                    }
                    for j in 0..dim {
                        let mut m = n64;
                        m[i] -= 1;
                        m[j] += 1;
                        if let Some(p) = layout.herm_pos(&m) {
                            b[(h, p)] += Complex64::new(a[(i, j)] * ((m[j] * n64[i]) as f64).sqrt(), 0.0);
                        }
                    }
                }
                for j in 0..dim {
                    if k[j] == 0 {
                        continue;
                    }
                    let t = Complex64::new(0.0, -TAU * k[j] as f64);
                    let mut up = n64;
                    up[j] += 1;
                    if let Some(p) = layout.herm_pos(&up) {
                        b[(h, p)] += t * ((n64[j] + 1) as f64).sqrt();
                    }
                    if n64[j] > 0 {
                        let mut dn = n64;
                        dn[j] -= 1;
                        if let Some(p) = layout.herm_pos(&dn) {
                            b[(h, p)] += t * (n64[j] as f64).sqrt();
                        }
                    }
                }
            }
            if mi == zero {
                b[(0, 0)] += Complex64::new(1.0, 0.0);
            }
            if dense {
                blocks.push(Block::Lu(b.lu()));
            } else {
                let d = (0..nh)
                    .map(|h| {
                        let c = b[(h, h)];
                        if c == ZERO {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(1.0, 0.0) / c
                        }
                    })
                    .collect();
                blocks.push(Block::Diagonal(d));
            }
        }
        BlockPreconditioner { nh, blocks }
    }

    fn apply(&self, r: &[Complex64], z: &mut [Complex64]) {
        let nh = self.nh;
        for (mi, block) in self.blocks.iter().enumerate() {
            let src = &r[mi * nh..(mi + 1) * nh];
            let dst = &mut z[mi * nh..(mi + 1) * nh];
            match block {
                Block::Lu(lu) => {
                    let sol = lu.solve(&DVector::from_column_slice(src)).unwrap_or_else(|| DVector::from_column_slice(src));
                    dst.copy_from_slice(sol.as_slice());
                }
                Block::Conj(other) => {
                    let Block::Lu(lu) = &self.blocks[*other] else {
                        unreachable!("conjugate partner is factored")
                    };
                    let rhs = DVector::from_iterator(nh, src.iter().map(|c| c.conj()));
                    let sol = lu.solve(&rhs).unwrap_or(rhs);
                    for (d, s) in dst.iter_mut().zip(sol.iter()) {
                        *d = s.conj();
                    }
                }
                Block::Diagonal(d) => {
                    for ((o, s), di) in dst.iter_mut().zip(src).zip(d) {
                        *o = s * di;
                    }
                }
            }
        }
    }
}

/// Assembled operator, Gibbs weights and preconditioner for one set of cuts.
pub struct CellSolver {
    model: Model,
    layout: Arc<Layout>,
    op: KfpOperator,
    precond: BlockPreconditioner,
    weight: FourierTable,
    opts: SolveOptions,
}

impl CellSolver {
    pub fn new(model: &Model, layout: Arc<Layout>, opts: SolveOptions) -> Result<Self, SpectralError> {
        let op = KfpOperator::assemble(model, layout.clone())?;
        let precond = BlockPreconditioner::new(model, &layout);
        let weight = model.weight_table(2 * layout.nx());
        Ok(CellSolver {
            model: model.clone(),
            layout,
            op,
            precond,
            weight,
            opts,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }
    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }
    pub fn operator(&self) -> &KfpOperator {
        &self.op
    }
    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }
    pub fn weight(&self) -> &FourierTable {
        &self.weight
    }

    pub fn apply(&self, f: &PhaseField) -> PhaseField {
        self.op.apply(&f.recut(self.layout.clone()))
    }

    /// `int f dm`.
    pub fn mean_m(&self, f: &PhaseField) -> f64 {
        mean_m(&self.weight, f)
    }

    /// `int f g dm` for real fields.
    pub fn inner_m(&self, f: &PhaseField, g: &PhaseField) -> f64 {
        inner_product_m(&self.weight, f, g)
    }

    /// Solve `L u = rhs` with `<u>_m = 0`.
    pub fn solve_mean_zero(&self, rhs: &PhaseField) -> Result<(PhaseField, SolveReport), SpectralError> {
        let rhs = rhs.recut(self.layout.clone());
        let rhs_mean = self.mean_m(&rhs);
        let rnorm = rhs.norm_flat();
        let tol = self.opts.compat_tol * rnorm.max(1.0);
        if rhs_mean.abs() > tol {
            return Err(SpectralError::IncompatibleRhs { mean: rhs_mean, tol });
        }
        let l = &self.layout;
        let nh = l.n_herm();
        let zero = l.flat(l.zero_mode(), 0);
        // w.x = <x>_m restricted to the Hermite-zero block.
        let w: Vec<(usize, Complex64)> = l
            .modes()
            .iter()
            .enumerate()
            .map(|(mi, k)| (mi * nh, self.weight.get(&[-k[0], -k[1], -k[2]])))
            .filter(|(_, c)| c.norm() > 0.0)
            .collect();
        let apply = |x: &[Complex64], y: &mut [Complex64]| {
            self.op.apply_raw(x, y);
            let s: Complex64 = w.iter().map(|(p, c)| c * x[*p]).sum();
            y[zero] += s;
        };
        let pre = |r: &[Complex64], z: &mut [Complex64]| self.precond.apply(r, z);
        let cfg = GmresConfig {
            tol: self.opts.tol,
            max_iter: self.opts.max_iter,
            restart: self.opts.restart,
        };
        let out = gmres(apply, pre, rhs.coeffs(), None, &cfg);
        if !out.converged {
            return Err(SpectralError::NoConvergence {
                residual_history: out.residual_history,
            });
        }
        let mut u = PhaseField::from_coeffs(l.clone(), out.x);
        u.enforce_real();
        let mean = self.mean_m(&u);
        let p = zero;
        u.coeffs_mut()[p] -= mean;
        let r = self.op.apply(&u).sub(&rhs);
        let residual = if rnorm > 0.0 { r.norm_flat() / rnorm } else { r.norm_flat() };
        Ok((
            u,
            SolveReport {
                iterations: out.iterations,
                residual_history: out.residual_history,
                residual,
                rhs_mean,
            },
        ))
    }
}

/// `int f dm` from the Fourier table of the normalized Gibbs weight.
pub fn mean_m(weight: &FourierTable, f: &PhaseField) -> f64 {
    let l = f.layout();
    l.modes()
        .iter()
        .enumerate()
        .map(|(mi, k)| (f.get(mi, 0) * weight.get(&[-k[0], -k[1], -k[2]])).re)
        .sum()
}

/// `int f g dm` for real fields; `weight` must cover `|q| <= 2 nx`.
pub fn inner_product_m(weight: &FourierTable, f: &PhaseField, g: &PhaseField) -> f64 {
    let (lf, lg) = (f.layout(), g.layout());
    assert_eq!(lf.dim(), lg.dim());
    let nh = lf.n_herm().min(lg.n_herm());
    let mut total = 0.0;
    for (mf, kf) in lf.modes().iter().enumerate() {
        let mut acc = ZERO;
        for (mg, kg) in lg.modes().iter().enumerate() {
            let q: [i32; MAX_DIM] = [-(kf[0] + kg[0]), -(kf[1] + kg[1]), -(kf[2] + kg[2])];
            let wq = weight.get(&q);
            if wq == ZERO {
                continue;
            }
            let mut s = ZERO;
            for h in 0..nh {
                s += f.get(mf, h) * g.get(mg, h);
            }
            acc += s * wq;
        }
        total += acc.re;
    }
    total
}
