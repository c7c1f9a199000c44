//! Heterogeneous polynomials `psi = sum_{|alpha| <= m} phi_alpha d^alpha q`.
//!
//! A heterogeneous polynomial is stored by its base polynomial `q` and a
//! shared corrector hierarchy. Cell averages, lattice jets, the action of the
//! operator and `L^2(Q_r; L^2_gamma)` norms are all computed from that pair.

mod norm;
mod regularity;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::cell::{CellError, CorrectorSet};
use crate::multi_index;
use crate::poly::{harmonic_decompose_in, newton_poly, FloatPoly, LatticeField, Metric, MultiPoly, PolyError, RatPoly};
use crate::spectral::{Ladder, Layout, LocalOperator, PeriodicField, MAX_DIM};

pub use norm::{gradient_norm, norm_bound_constant, CellQuadrature};
pub use regularity::{fit_loglog, regularity_scan, RegularityReport, RegularityRow, ScanOptions};

#[derive(Debug, Error)]
pub enum HetPolyError {
    #[error("correctors known to order {available}, need {needed}")]
    InsufficientOrder { needed: u32, available: u32 },
    #[error("lattice data system is singular at index {index:?}")]
    SingularSystem { index: Vec<u32> },
    #[error("missing lattice datum for index {0:?}")]
    MissingData(Vec<u32>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Cell(#[from] CellError),
}

/// `sum_{|alpha| <= deg q} phi_alpha d^alpha q` with `phi_0 = 1`.
#[derive(Debug, Clone)]
pub struct HetPoly {
    cset: Arc<CorrectorSet>,
    base: FloatPoly,
}

/// `int_{-1/2}^{1/2} e^{2 pi i k s} s^p ds`.
fn cell_moment(k: i32, p: u32) -> Complex64 {
    if k == 0 {
        return if p % 2 == 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.5f64.powi(p as i32) / (p + 1) as f64, 0.0)
        };
    }
    let iw = Complex64::new(0.0, std::f64::consts::TAU * k as f64);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = Complex64::new(0.0, 0.0);
    for q in 1..=p {
        let edge = sign * (0.5f64.powi(q as i32) - (-0.5f64).powi(q as i32));
        acc = (edge - q as f64 * acc) / iw;
    }
    acc
}

impl HetPoly {
    pub fn new(cset: Arc<CorrectorSet>, base: FloatPoly) -> Result<Self, HetPolyError> {
        if base.dim() != cset.dim() {
            return Err(PolyError::DimensionMismatch { expected: cset.dim(), found: base.dim() }.into());
        }
        let deg = base.degree().unwrap_or(0);
        if deg > cset.order() {
            return Err(HetPolyError::InsufficientOrder { needed: deg, available: cset.order() });
        }
        Ok(HetPoly { cset, base })
    }

    pub fn zero(cset: Arc<CorrectorSet>) -> Self {
        let base = FloatPoly::zero(cset.dim());
        HetPoly { cset, base }
    }

    pub fn base(&self) -> &FloatPoly {
        &self.base
    }

    pub fn correctors(&self) -> &Arc<CorrectorSet> {
        &self.cset
    }

    pub fn dim(&self) -> usize {
        self.cset.dim()
    }

    pub fn degree(&self) -> u32 {
        self.base.degree().unwrap_or(0)
    }

    /// Same correctors, base `self.base - other.base`.
    pub fn difference(&self, other: &HetPoly) -> HetPoly {
        HetPoly {
            cset: self.cset.clone(),
            base: &self.base - &other.base,
        }
    }

    /// Hermite cut holding every term.
    pub fn hermite_cut(&self) -> usize {
        hermite_cut(&self.cset, self.degree())
    }

    /// Pointwise value from the defining sum.
    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        let mut out = self.base.eval_f64(x);
        for alpha in multi_index::up_to_degree(self.dim(), self.degree()) {
            if multi_index::degree(&alpha) == 0 {
                continue;
            }
            let dq = self.base.derivative_multi(&alpha);
            if dq.is_zero() {
                continue;
            }
            let phi = self.cset.corrector(&alpha).expect("order checked");
            out += dq.eval_f64(x) * phi.eval(x, v);
        }
        out
    }

    /// Hermite coefficients of `v -> psi(x, v)` on [`Self::hermite_cut`] and
    /// their x-gradients.
    pub fn local(&self, x: &[f64]) -> (Vec<f64>, Vec<[f64; MAX_DIM]>) {
        let d = self.dim();
        let nh = Layout::new(d, 0, self.hermite_cut()).n_herm();
        let mut vals = vec![0.0; nh];
        let mut grads = vec![[0.0; MAX_DIM]; nh];
        for alpha in multi_index::up_to_degree(d, self.degree()) {
            let dq = self.base.derivative_multi(&alpha);
            if dq.is_zero() {
                continue;
            }
            let p = dq.eval_f64(x);
            let dp: Vec<f64> = (0..d).map(|j| dq.derivative(j).eval_f64(x)).collect();
            if multi_index::degree(&alpha) == 0 {
                vals[0] += p;
                for j in 0..d {
                    grads[0][j] += dp[j];
                }
                continue;
            }
            let (cv, cg) = self.cset.corrector(&alpha).expect("order checked").local(x);
            for h in 0..cv.len() {
                vals[h] += p * cv[h];
                for j in 0..d {
                    grads[h][j] += dp[j] * cv[h] + p * cg[h][j];
                }
            }
        }
        (vals, grads)
    }

    /// The cell average `z -> int_{z + Q_1} <psi>_gamma dy` as a polynomial in `z`.
    pub fn cell_average(&self) -> FloatPoly {
        let weights = cell_average_weights(&self.cset, self.degree());
        let mut out = FloatPoly::zero(self.dim());
        for (gamma, w) in &weights {
            if *w != 0.0 {
                out = &out + &self.base.derivative_multi(gamma).scale(w);
            }
        }
        out
    }

    /// Cell averages on `Z^d` inside `Q_r`.
    pub fn eval_cells(&self, r: usize) -> LatticeField {
        let avg = self.cell_average();
        let rad = (r / 2) as i64;
        LatticeField::centered(self.dim(), rad, |z| {
            let zf: Vec<f64> = z.iter().map(|&c| c as f64).collect();
            avg.eval_f64(&zf)
        })
    }

    /// Forward differences `D^k psi_hat(0)` for `|k| <= m`.
    pub fn lattice_jets(&self, m: u32) -> BTreeMap<Vec<u32>, f64> {
        let avg = self.cell_average();
        let zero = vec![0.0; self.dim()];
        multi_index::up_to_degree(self.dim(), m)
            .into_iter()
            .map(|k| {
                let v = avg.forward_difference_multi(&k).eval_f64(&zero);
                (k, v)
            })
            .collect()
    }

    /// `macro_apply` of the base polynomial; `L psi + apply_l() = 0`.
    pub fn apply_l(&self) -> Result<FloatPoly, HetPolyError> {
        Ok(self.cset.tensors().apply(&self.base)?)
    }

    /// `||L psi + A q|| / ||psi||` in Hermite coefficients, accumulated over
    /// an `n^d` grid on `Q_r`, with `L phi_alpha` projected onto the Hermite
    /// cut that `phi_alpha` was solved on. This is the residual of the
    /// assembled discrete operator; [`Self::pointwise_residual`] keeps the
    /// truncation tail.
    pub fn operator_residual(&self, r: usize, n: usize) -> Result<f64, HetPolyError> {
        self.residual_impl(r, n, true)
    }

    /// As [`Self::operator_residual`] but with the untruncated operator.
    pub fn pointwise_residual(&self, r: usize, n: usize) -> Result<f64, HetPolyError> {
        self.residual_impl(r, n, false)
    }

    fn residual_impl(&self, r: usize, n: usize, project: bool) -> Result<f64, HetPolyError> {
        let aq = self.apply_l()?;
        let d = self.dim();
        let cut = self.hermite_cut();
        let target = Layout::new(d, 0, cut + 1);
        let model = self.cset.model();
        let alphas: Vec<(Vec<u32>, FloatPoly)> = multi_index::up_to_degree(d, self.degree())
            .into_iter()
            .map(|a| {
                let dq = self.base.derivative_multi(&a);
                (a, dq)
            })
            .filter(|(_, dq)| !dq.is_zero())
            .collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for u in crate::spectral::unit_grid(d, n) {
            let x: Vec<f64> = (0..d).map(|j| r as f64 * (u[j] - 0.5 + 0.5 / n as f64)).collect();
            let mut out = vec![0.0; target.n_herm()];
            let mut norm_sq = vec![0.0; target.n_herm()];
            for (alpha, dq) in &alphas {
                let p = dq.eval_f64(&x);
                let (vals, grads) = if multi_index::degree(alpha) == 0 {
                    (vec![1.0], vec![[0.0; MAX_DIM]])
                } else {
                    self.cset.corrector(alpha).expect("order checked").local(&x)
                };
                let own = hermite_cut(&self.cset, multi_index::degree(alpha));
                let src = Layout::new(d, 0, own);
                let mut vals = vals;
                let mut grads = grads;
                vals.resize(src.n_herm(), 0.0);
                grads.resize(src.n_herm(), [0.0; MAX_DIM]);
                for (c, v) in norm_sq.iter_mut().zip(&vals) {
                    *c += p * v;
                }
                let lphi = LocalOperator::new(model, own).apply(&x, &vals, &grads);
                let keep = if project { src.n_herm() } else { lphi.len() };
                for (o, c) in out.iter_mut().zip(&lphi[..keep]) {
                    *o += p * c;
                }
                // product rule: -v_j phi_alpha d_j d^alpha q
                let lad = Ladder { src: &src, dst: &target };
                for j in 0..d {
                    let s = dq.derivative(j).eval_f64(&x);
                    if s != 0.0 {
                        lad.mul_v(&vals, j, -s, &mut out);
                    }
                }
            }
            out[0] += aq.eval_f64(&x);
            num += out.iter().map(|c| c * c).sum::<f64>();
            den += norm_sq.iter().map(|c| c * c).sum::<f64>();
        }
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    /// `||psi||_{L^2(Q_r; L^2_gamma)}` with normalized volume.
    pub fn norm(&self, r: usize) -> f64 {
        CellQuadrature::new(&self.cset, self.degree(), None).norm(&self.base, r)
    }
}

pub(crate) fn hermite_cut(cset: &CorrectorSet, degree: u32) -> usize {
    cset.options().nv + degree.max(1) as usize - 1
}

/// `w_gamma` with `psi_hat = sum_gamma w_gamma d^gamma q` for every base of
/// degree at most `degree`.
fn cell_average_weights(cset: &CorrectorSet, degree: u32) -> BTreeMap<Vec<u32>, f64> {
    let d = cset.dim();
    let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for alpha in multi_index::up_to_degree(d, degree) {
        let rest = degree - multi_index::degree(&alpha);
        let mean: Option<PeriodicField> = if multi_index::degree(&alpha) == 0 {
            None
        } else {
            let phi = cset.corrector(&alpha).expect("order checked");
            let h0 = phi.layout().herm_pos(&[0, 0, 0]).expect("cut contains n = 0");
            Some(PeriodicField::hermite_component(phi, h0))
        };
        for beta in multi_index::up_to_degree(d, rest) {
            let moment = |k: &[i32]| -> Complex64 { (0..d).map(|j| cell_moment(k[j], beta[j])).product() };
            let w = match &mean {
                None => moment(&[0; MAX_DIM]).re,
                Some(c) => c
                    .modes()
                    .iter()
                    .zip(c.coeffs())
                    .map(|(k, ck)| ck * moment(k))
                    .sum::<Complex64>()
                    .re,
            };
            *out.entry(multi_index::add(&alpha, &beta)).or_insert(0.0) += w / multi_index::factorial_f64(&beta);
        }
    }
    out
}

/// The unique `psi` with base of degree at most `m` whose lattice jets
/// `D^k psi_hat(0)`, `|k| <= m`, equal `data`.
///
/// Newton polynomials `N_beta` satisfy `D^k N_beta(0) = delta_{k beta}` and
/// corrector terms only lower the degree, so the jets are triangular in
/// the degree and are fixed from the top level down.
pub fn from_lattice_data(cset: Arc<CorrectorSet>, m: u32, data: &BTreeMap<Vec<u32>, f64>) -> Result<HetPoly, HetPolyError> {
    let d = cset.dim();
    if m > cset.order() {
        return Err(HetPolyError::InsufficientOrder { needed: m, available: cset.order() });
    }
    for k in multi_index::up_to_degree(d, m) {
        if !data.contains_key(&k) {
            return Err(HetPolyError::MissingData(k));
        }
    }
    let mut psi = HetPoly::zero(cset.clone());
    for level in (0..=m).rev() {
        let jets = psi.lattice_jets(m);
        let mut update = FloatPoly::zero(d);
        for beta in multi_index::of_degree(d, level) {
            let basis = HetPoly::new(cset.clone(), newton_poly(&beta).to_f64())?;
            let diag = basis.lattice_jets(level)[&beta];
            if (diag - 1.0).abs() > 1e-8 {
                return Err(HetPolyError::SingularSystem { index: beta });
            }
            let c = (data[&beta] - jets[&beta]) / diag;
            update = &update + &basis.base.scale(&c);
        }
        psi.base = &psi.base + &update;
    }
    Ok(psi)
}

/// Outcome of [`solve_poly_rhs`].
#[derive(Debug, Clone)]
pub struct PolySolve {
    pub psi: HetPoly,
    /// Exact base polynomial.
    pub base: RatPoly,
    /// [`HetPoly::operator_residual`] on the unit cell.
    pub residual: f64,
}

/// `psi` with `L psi = p`: the base solves `A q = -p` exactly.
pub fn solve_poly_rhs(cset: Arc<CorrectorSet>, p: &FloatPoly) -> Result<PolySolve, HetPolyError> {
    let deg = p.degree().unwrap_or(0);
    if p.is_zero() {
        return Ok(PolySolve {
            psi: HetPoly::zero(cset),
            base: RatPoly::zero(p.dim()),
            residual: 0.0,
        });
    }
    if cset.order() < deg + 2 {
        return Err(HetPolyError::InsufficientOrder { needed: deg + 2, available: cset.order() });
    }
    let tensors = cset.tensors().to_rational();
    let target = -&p.map(|c| <crate::poly::Rational as crate::poly::Scalar>::from_f64(*c));
    let base = tensors.invert(&target, 1.0)?.q;
    let psi = HetPoly::new(cset, base.to_f64())?;
    let residual = psi.operator_residual(1, 8)?;
    Ok(PolySolve { psi, base, residual })
}

/// Random base of degree `m` whose top part is harmonic for the second-order
/// effective matrix, corrected so that `A q = 0` exactly.
pub fn random_solution_base(cset: &CorrectorSet, m: u32, rng: &mut impl rand::Rng) -> Result<RatPoly, HetPolyError> {
    let d = cset.dim();
    let tensors = cset.tensors().to_rational();
    let metric = Metric::new(tensors.second_order_matrix())?;
    let raw = crate::poly::random_poly(d, m, rng);
    let top = harmonic_decompose_in(&raw.homogeneous_part(m), &metric)?
        .into_iter()
        .next()
        .unwrap_or_else(|| MultiPoly::zero(d));
    let mut h = &(&raw - &raw.homogeneous_part(m)) + &top;
    if h.is_zero() {
        h = MultiPoly::constant(d, crate::poly::rat(1, 1));
    }
    let ah = tensors.apply(&h)?;
    if ah.is_zero() {
        return Ok(h);
    }
    let w = tensors.invert(&ah, 1.0)?.q;
    Ok(&h - &w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_moments_match_quadrature() {
        let rule = crate::quad::gauss_legendre(40).mapped(-0.5, 0.5);
        for k in -3..=3 {
            for p in 0..7 {
                let w = std::f64::consts::TAU * k as f64;
                let re = rule.integrate(|s| (w * s).cos() * s.powi(p as i32));
                let im = rule.integrate(|s| (w * s).sin() * s.powi(p as i32));
                let got = cell_moment(k, p);
                assert!((got.re - re).abs() < 1e-13 && (got.im - im).abs() < 1e-13, "k = {k}, p = {p}");
            }
        }
    }
}
