//! Residual of the two-scale expansion `W = Q + phi_i d_i Q + psi_ij d_ij Q`.

use serde::{Deserialize, Serialize};

use super::qbar::GaussianQbar;
use crate::cell::{Centring, CorrectorSet, SecondCorrectors};
use crate::multi_index;
use crate::spectral::{Ladder, Layout, LocalOperator, PhaseField};

/// Space-time sample points: `times x [-half_width, half_width]^d` with
/// `points` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualGrid {
    pub times: Vec<f64>,
    pub half_width: f64,
    pub points: usize,
    /// Relative step of the fourth-order time difference.
    pub time_step: f64,
}

impl Default for ResidualGrid {
    fn default() -> Self {
        ResidualGrid {
            times: vec![1.0, 2.0, 4.0],
            half_width: 2.0,
            points: 9,
            time_step: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoScaleReport {
    pub centring: Centring,
    /// Root mean square over samples of `||(d_t + L) W - claimed||_{L^2_gamma}`.
    pub residual: f64,
    /// Root mean square of `||L W||_{L^2_gamma}`.
    pub scale: f64,
    pub relative: f64,
    pub max_abs: f64,
    pub samples: usize,
}

struct Term<'a> {
    field: &'a PhaseField,
    nv: usize,
    alpha: Vec<u32>,
}

/// Hermite coefficients of `W(t, x, .)` on `dst`.
fn w_local(terms: &[Term], q: &GaussianQbar, t: f64, x: &[f64], dst: &Layout) -> Vec<f64> {
    let dq = q.derivatives(t, x, 2);
    let mut out = vec![0.0; dst.n_herm()];
    out[0] += dq[&vec![0; q.dim()]];
    for term in terms {
        let (vals, _) = term.field.local(x);
        let s = dq[&term.alpha];
        for (o, v) in out.iter_mut().zip(&vals) {
            *o += s * v;
        }
    }
    out
}

/// Applies `d_t + L` to the two-scale expansion built from `cset`, `psi` and
/// the closed-form `q`, and compares it with
///
/// ```text
/// sum_i phi_i d_t d_i Q + sum_ij psi_ij (d_t d_ij Q - v . grad d_ij Q) - (c(x) - abar) : grad^2 Q
/// ```
///
/// where `c` is the centring of `psi`. The time derivative is a fourth-order
/// central difference of `W`; `L` acts on each corrector through the
/// Galerkin operator of its own Hermite cut, and on the slow factors by the
/// product rule.
pub fn two_scale_residual(cset: &CorrectorSet, psi: &SecondCorrectors, q: &GaussianQbar, grid: &ResidualGrid) -> TwoScaleReport {
    let d = cset.dim();
    let model = cset.model();
    let abar = cset.diffusivity();
    let mut terms = Vec::new();
    for i in 0..d {
        let phi = cset.corrector(&multi_index::unit(d, i)).expect("order >= 1");
        terms.push(Term {
            field: phi,
            nv: phi.layout().nv(),
            alpha: multi_index::unit(d, i),
        });
    }
    for i in 0..d {
        for j in 0..d {
            let f = psi.get(i, j);
            let mut alpha = multi_index::unit(d, i);
            alpha[j] += 1;
            terms.push(Term {
                field: f,
                nv: f.layout().nv(),
                alpha,
            });
        }
    }
    let top = terms.iter().map(|t| t.nv).max().unwrap_or(1);
    let dst = Layout::new(d, 0, top + 1);
    let n = grid.points.max(1);
    let axis: Vec<f64> = (0..n)
        .map(|k| if n == 1 { 0.0 } else { -grid.half_width + 2.0 * grid.half_width * k as f64 / (n - 1) as f64 })
        .collect();
    let mut xs: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..d {
        xs = xs.into_iter().flat_map(|p| axis.iter().map(move |&a| [p.clone(), vec![a]].concat())).collect();
    }

    let mut num = 0.0;
    let mut den = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut samples = 0;
    for &t in &grid.times {
        let h = grid.time_step * t;
        for x in &xs {
            // d_t W by finite differences
            let wp2 = w_local(&terms, q, t + 2.0 * h, x, &dst);
            let wp1 = w_local(&terms, q, t + h, x, &dst);
            let wm1 = w_local(&terms, q, t - h, x, &dst);
            let wm2 = w_local(&terms, q, t - 2.0 * h, x, &dst);
            let mut res: Vec<f64> = (0..dst.n_herm())
                .map(|k| (-wp2[k] + 8.0 * wp1[k] - 8.0 * wm1[k] + wm2[k]) / (12.0 * h))
                .collect();

            let dq = q.derivatives(t, x, 3);
            let dtq = q.time_derivatives(t, x, 2);
            let zero = vec![0; d];
            let unit_src = Layout::new(d, 0, 0);
            let mut lw = vec![0.0; dst.n_herm()];
            // L Q = -v . grad Q
            let lad0 = Ladder { src: &unit_src, dst: &dst };
            for j in 0..d {
                lad0.mul_v(&[1.0], j, -dq[&multi_index::unit(d, j)], &mut lw);
            }
            let mut claimed = vec![0.0; dst.n_herm()];
            for term in &terms {
                let (vals, grads) = term.field.local(x);
                let src = Layout::new(d, 0, term.nv);
                let s = dq[&term.alpha];
                let lf = LocalOperator::new(model, term.nv).apply(x, &vals, &grads);
                for (o, c) in lw.iter_mut().zip(&lf[..src.n_herm()]) {
                    *o += s * c;
                }
                let lad = Ladder { src: &src, dst: &dst };
                for j in 0..d {
                    let up = multi_index::raise(&term.alpha, j);
                    lad.mul_v(&vals, j, -dq[&up], &mut lw);
                }
                // claimed right-hand side
                let st = dtq[&term.alpha];
                for (o, v) in claimed.iter_mut().zip(&vals) {
                    *o += st * v;
                }
                if multi_index::degree(&term.alpha) == 2 {
                    for j in 0..d {
                        let up = multi_index::raise(&term.alpha, j);
                        lad.mul_v(&vals, j, -dq[&up], &mut claimed);
                    }
                }
            }
            if psi.centring == Centring::Local {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        let mut alpha = zero.clone();
                        alpha[i] += 1;
                        alpha[j] += 1;
                        s += (cset.local_diffusivity(i, j).eval(x) - abar[(i, j)]) * dq[&alpha];
                    }
                }
                claimed[0] -= s;
            }
            for k in 0..dst.n_herm() {
                res[k] += lw[k] - claimed[k];
            }
            let r2: f64 = res.iter().map(|c| c * c).sum();
            num += r2;
            den += lw.iter().map(|c| c * c).sum::<f64>();
            max_abs = max_abs.max(r2.sqrt());
            samples += 1;
        }
    }
    let residual = (num / samples as f64).sqrt();
    let scale = (den / samples as f64).sqrt();
    TwoScaleReport {
        centring: psi.centring,
        residual,
        scale,
        relative: residual / scale,
        max_abs,
        samples,
    }
}
