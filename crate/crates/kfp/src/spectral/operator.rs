//! Galerkin assembly of the kinetic Fokker-Planck operator.
//!
//! In the orthonormal Hermite basis `v_j = A_j + A_j^+` and
//! `partial_{v_j} = A_j`, so
//!
//! ```text
//! L = sum_ij a_ij(x) A_i^+ A_j  -  sum_j partial_{x_j} (A_j + A_j^+)  +  sum_j partial_j H(x) A_j
//! ```
//!
//! Multiplication by `a_ij(x)` and `partial_j H(x)` is a Fourier convolution.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::Arc;

use super::field::PhaseField;
use super::layout::{Layout, MAX_DIM};
use super::model::Model;
use super::SpectralError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Assembled sparse operator in compressed-row form.
#[derive(Debug, Clone)]
pub struct KfpOperator {
    layout: Arc<Layout>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

type Conv = Vec<([i32; MAX_DIM], Complex64)>;

/// Check that the cuts can hold the convolutions with `H` and `a`.
pub fn check_cuts(model: &Model, layout: &Layout) -> Result<(), SpectralError> {
    if model.dim() != layout.dim() {
        return Err(SpectralError::DimensionMismatch {
            expected: model.dim(),
            found: layout.dim(),
        });
    }
    let bw_a = model
        .friction
        .terms()
        .iter()
        .map(|t| t.k.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let need_x = model.potential.bandwidth().max(bw_a);
    if layout.nx() < need_x || layout.nv() < 1 {
        return Err(SpectralError::CutsTooSmall {
            nx: layout.nx(),
            nv: layout.nv(),
            need_nx: need_x,
        });
    }
    Ok(())
}

impl KfpOperator {
    pub fn assemble(model: &Model, layout: Arc<Layout>) -> Result<Self, SpectralError> {
        check_cuts(model, &layout)?;
        let dim = layout.dim();
        let friction: Vec<Vec<Conv>> = (0..dim)
            .map(|i| (0..dim).map(|j| model.friction.entry_fourier(i, j)).collect())
            .collect();
        let force: Vec<Conv> = (0..dim).map(|j| model.potential.grad_fourier(j)).collect();

        let nh = layout.n_herm();
        let mut row_ptr = Vec::with_capacity(layout.len() + 1);
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<Complex64> = Vec::new();
        row_ptr.push(0);
        let mut row: Vec<(u32, Complex64)> = Vec::new();

        for k in layout.modes().iter() {
            for n in layout.hermite().iter() {
                row.clear();
                let n64 = [n[0] as i64, n[1] as i64, n[2] as i64];
                let mut push = |kk: &[i32; MAX_DIM], m: &[i64; MAX_DIM], c: Complex64| {
                    if let (Some(mp), Some(hp)) = (layout.mode_pos(kk), layout.herm_pos(m)) {
                        row.push(((mp * nh + hp) as u32, c));
                    }
                };
                // Collision: a_ij A_i^+ A_j maps e_m, m = n - e_i + e_j, to
                // sqrt(m_j) sqrt(n_i) e_n.
                for i in 0..dim {
                    if n64[i] == 0 {
                        continue;
                    }
                    for j in 0..dim {
                        let mut m = n64;
                        m[i] -= 1;
                        m[j] += 1;
                        let c = ((m[j] as f64) * (n64[i] as f64)).sqrt();
                        for (q, aq) in &friction[i][j] {
                            let src = [k[0] - q[0], k[1] - q[1], k[2] - q[2]];
                            push(&src, &m, aq * c);
                        }
                    }
                }
                // Transport: -2 pi i k_j (A_j + A_j^+).
                for j in 0..dim {
                    if k[j] == 0 {
                        continue;
                    }
                    let t = Complex64::new(0.0, -TAU * k[j] as f64);
                    let mut up = n64;
                    up[j] += 1;
                    push(k, &up, t * ((n64[j] + 1) as f64).sqrt());
                    if n64[j] > 0 {
                        let mut dn = n64;
                        dn[j] -= 1;
                        push(k, &dn, t * (n64[j] as f64).sqrt());
                    }
                }
                // Force: partial_j H A_j.
                for j in 0..dim {
                    let mut up = n64;
                    up[j] += 1;
                    let c = ((n64[j] + 1) as f64).sqrt();
                    for (q, gq) in &force[j] {
                        let src = [k[0] - q[0], k[1] - q[1], k[2] - q[2]];
                        push(&src, &up, gq * c);
                    }
                }
                row.sort_by_key(|e| e.0);
                let mut last: Option<u32> = None;
                for &(c, v) in row.iter() {
                    if last == Some(c) {
                        *vals.last_mut().expect("entry") += v;
                    } else {
                        cols.push(c);
                        vals.push(v);
                        last = Some(c);
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        Ok(KfpOperator {
            layout,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply_raw(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[p] * x[self.cols[p] as usize];
            }
            *yr = acc;
        }
    }

    pub fn apply(&self, f: &PhaseField) -> PhaseField {
        assert!(**f.layout() == *self.layout, "layout mismatch");
        let mut out = PhaseField::zeros(self.layout.clone());
        self.apply_raw(f.coeffs(), out.coeffs_mut());
        out
    }

    /// Entry `(row, col)`; zero when not stored.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&(col as u32)) {
            Ok(p) => self.vals[range.start + p],
            Err(_) => ZERO,
        }
    }
}

/// Hermite ladder action on real coefficient vectors at a fixed point x.
pub struct Ladder<'a> {
    pub src: &'a Layout,
    pub dst: &'a Layout,
}

impl Ladder<'_> {
    /// `out += s * A_j u`.
    pub fn lower(&self, u: &[f64], j: usize, s: f64, out: &mut [f64]) {
        for (h, n) in self.src.hermite().iter().enumerate() {
            if n[j] == 0 || u[h] == 0.0 {
                continue;
            }
            let mut m = [n[0] as i64, n[1] as i64, n[2] as i64];
            m[j] -= 1;
            if let Some(p) = self.dst.herm_pos(&m) {
                out[p] += s * (n[j] as f64).sqrt() * u[h];
            }
        }
    }

    /// `out += s * A_j^+ u`.
    pub fn raise(&self, u: &[f64], j: usize, s: f64, out: &mut [f64]) {
        for (h, n) in self.src.hermite().iter().enumerate() {
            if u[h] == 0.0 {
                continue;
            }
            let mut m = [n[0] as i64, n[1] as i64, n[2] as i64];
            m[j] += 1;
            if let Some(p) = self.dst.herm_pos(&m) {
                out[p] += s * ((n[j] + 1) as f64).sqrt() * u[h];
            }
        }
    }

    /// `out += s * v_j u`.
    pub fn mul_v(&self, u: &[f64], j: usize, s: f64, out: &mut [f64]) {
        self.lower(u, j, s, out);
        self.raise(u, j, s, out);
    }
}

/// Untruncated action of `L` at a fixed point x. Given the Hermite
/// coefficients of `v -> f(x, v)` and their x-gradients on the cut `nv`,
/// produces the Hermite coefficients of `(L f)(x, .)` on the cut `nv + 1`.
#[derive(Debug, Clone)]
pub struct LocalOperator<'a> {
    model: &'a Model,
    src: Layout,
    dst: Layout,
}

impl<'a> LocalOperator<'a> {
    pub fn new(model: &'a Model, nv: usize) -> Self {
        let dim = model.dim();
        LocalOperator {
            model,
            src: Layout::new(dim, 0, nv),
            dst: Layout::new(dim, 0, nv + 1),
        }
    }

    pub fn source(&self) -> &Layout {
        &self.src
    }
    pub fn target(&self) -> &Layout {
        &self.dst
    }

    pub fn apply(&self, x: &[f64], vals: &[f64], grads: &[[f64; MAX_DIM]]) -> Vec<f64> {
        let dim = self.src.dim();
        let (src, dst) = (&self.src, &self.dst);
        let lad = Ladder { src, dst };
        let mut out = vec![0.0; dst.n_herm()];
        let a = self.model.friction.matrix_at(x);
        let mut gh = [0.0; MAX_DIM];
        self.model.potential.grad(x, &mut gh);
        let down = Ladder { src, dst: src };
        let up = Ladder { src, dst };
        let mut aj = vec![0.0; src.n_herm()];
        let mut dj = vec![0.0; src.n_herm()];
        for j in 0..dim {
            aj.iter_mut().for_each(|c| *c = 0.0);
            down.lower(vals, j, 1.0, &mut aj);
            for i in 0..dim {
                if a[(i, j)] != 0.0 {
                    up.raise(&aj, i, a[(i, j)], &mut out);
                }
            }
            // The graded order makes the source cut a prefix of the target.
            if gh[j] != 0.0 {
                for (o, c) in out.iter_mut().zip(&aj) {
                    *o += gh[j] * c;
                }
            }
            for (d, g) in dj.iter_mut().zip(grads) {
                *d = g[j];
            }
            lad.mul_v(&dj, j, -1.0, &mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Friction, Potential};

    #[test]
    fn free_number_operator_on_velocity() {
        let model = Model::free(1);
        let l = Arc::new(Layout::new(1, 0, 4));
        let op = KfpOperator::assemble(&model, l.clone()).unwrap();
        let v = PhaseField::velocity(l, 0);
        assert_eq!(op.apply(&v), v);
    }

    #[test]
    fn transport_of_plane_wave() {
        let model = Model::free(1);
        let l = Arc::new(Layout::new(1, 2, 3));
        let op = KfpOperator::assemble(&model, l.clone()).unwrap();
        let mut f = PhaseField::zeros(l.clone());
        let m1 = l.mode_pos(&[1]).unwrap();
        f.set(m1, 0, Complex64::new(1.0, 0.0));
        let g = op.apply(&f);
        let h1 = l.herm_unit(0).unwrap();
        for (i, c) in g.coeffs().iter().enumerate() {
            if i == l.flat(m1, h1) {
                assert!((c - Complex64::new(0.0, -TAU)).norm() < 1e-14);
            } else {
                assert_eq!(*c, ZERO);
            }
        }
    }

    #[test]
    fn cuts_too_small_rejected() {
        let model = Model::new(Potential::cosine(1, 1.0), Friction::identity(1)).unwrap();
        let l = Arc::new(Layout::new(1, 0, 4));
        assert!(matches!(
            KfpOperator::assemble(&model, l),
            Err(SpectralError::CutsTooSmall { .. })
        ));
    }
}
