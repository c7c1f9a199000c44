//! Exact flow of `dX = V dt, dV = -a V dt + sqrt(2) a^{1/2} dW` over one step.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::spectral::MAX_DIM;

/// Scalar friction `l`, step `h`: transition coefficients and the Cholesky
/// factor of the `(X, V)` noise covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ScalarStep {
    /// `V <- decay V + ...`
    pub decay: f64,
    /// `X <- X + drift V + ...`
    pub drift: f64,
    /// Lower-triangular factor `[[lxx, 0], [lvx, lvv]]` of `Cov(xi_X, xi_V)`.
    pub lxx: f64,
    pub lvx: f64,
    pub lvv: f64,
}

/// Noise covariance entries `(Var X, Cov(X, V), Var V)` after time `h`
/// started from `(0, 0)`, with unit stationary velocity variance.
pub fn ou_covariance(l: f64, h: f64) -> (f64, f64, f64) {
    let e1 = (-l * h).exp_m1();
    let e2 = (-2.0 * l * h).exp_m1();
    let var_v = -e2;
    let cov = e1 * e1 / l;
    let u = l * h;
    let var_x = if u < 0.1 {
        // the closed form cancels to O(u^3)
        let mut term = u * u / 2.0;
        let mut sum = 0.0;
        for n in 3..24 {
            term *= u / n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += (4.0 * sign - sign * 2f64.powi(n)) * term;
        }
        sum / (l * l)
    } else {
        (2.0 * u + 4.0 * e1 - e2) / (l * l)
    };
    (var_x, cov, var_v)
}

impl ScalarStep {
    pub fn new(l: f64, h: f64) -> Self {
        let (vxx, vxv, vvv) = ou_covariance(l, h);
        let decay = (-l * h).exp();
        let drift = -(-l * h).exp_m1() / l;
        // factor with V first: its variance is the well-conditioned one
        let lvv = vvv.sqrt();
        let lvx = vxv / lvv;
        let lxx = (vxx - lvx * lvx).max(0.0).sqrt();
        ScalarStep {
            decay,
            drift,
            lxx,
            lvx,
            lvv,
        }
    }
}

/// The friction in its eigenbasis.
#[derive(Debug, Clone)]
pub(crate) struct OuFlow {
    dim: usize,
    /// Columns are eigenvectors; `None` when the friction is diagonal.
    basis: Option<[[f64; MAX_DIM]; MAX_DIM]>,
    steps: [ScalarStep; MAX_DIM],
}

impl OuFlow {
    pub fn new(a: &DMatrix<f64>, h: f64) -> Self {
        let dim = a.nrows();
        let diagonal = (0..dim).all(|i| (0..dim).all(|j| i == j || a[(i, j)] == 0.0));
        let mut steps = [ScalarStep::new(1.0, h); MAX_DIM];
        let basis = if diagonal {
            for (i, s) in steps.iter_mut().enumerate().take(dim) {
                *s = ScalarStep::new(a[(i, i)], h);
            }
            None
        } else {
            let eig = SymmetricEigen::new(a.clone());
            let mut u = [[0.0; MAX_DIM]; MAX_DIM];
            for i in 0..dim {
                steps[i] = ScalarStep::new(eig.eigenvalues[i], h);
                for (r, row) in u.iter_mut().enumerate().take(dim) {
                    row[i] = eig.eigenvectors[(r, i)];
                }
            }
            Some(u)
        };
        OuFlow { dim, basis, steps }
    }

    /// Noise increment of one step in the eigenbasis from standard normals.
    /// Arrays are stored by coordinate: `z[j][l]` is coordinate `j` of copy `l`.
    #[inline(always)]
    pub fn noise<const D: usize, const L: usize>(&self, zx: &[[f64; L]; D], zv: &[[f64; L]; D]) -> Noise<D, L> {
        let mut n = Noise {
            x: [[0.0; L]; D],
            v: [[0.0; L]; D],
        };
        for j in 0..D {
            let s = &self.steps[j];
            for l in 0..L {
                n.v[j][l] = s.lvv * zv[j][l];
                n.x[j][l] = s.lvx * zv[j][l] + s.lxx * zx[j][l];
            }
        }
        n
    }

    /// Increment over two consecutive steps of this flow driven by `first`
    /// and then `second`.
    #[inline(always)]
    pub fn compose<const D: usize, const L: usize>(&self, first: &Noise<D, L>, second: &Noise<D, L>) -> Noise<D, L> {
        let mut n = *second;
        for j in 0..D {
            let s = &self.steps[j];
            for l in 0..L {
                n.x[j][l] += first.x[j][l] + s.drift * first.v[j][l];
                n.v[j][l] += s.decay * first.v[j][l];
            }
        }
        n
    }

    /// Advances `L` independent copies by one step with the given increment.
    #[inline(always)]
    pub fn apply<const D: usize, const L: usize>(&self, x: &mut [[f64; L]; D], v: &mut [[f64; L]; D], noise: &Noise<D, L>) {
        debug_assert_eq!(D, self.dim);
        match &self.basis {
            None => {
                for j in 0..D {
                    advance(&self.steps[j], &mut x[j], &mut v[j], &noise.x[j], &noise.v[j]);
                }
            }
            Some(u) => {
                let mut xt = [[0.0; L]; D];
                let mut vt = [[0.0; L]; D];
                for i in 0..D {
                    for r in 0..D {
                        for l in 0..L {
                            xt[i][l] += u[r][i] * x[r][l];
                            vt[i][l] += u[r][i] * v[r][l];
                        }
                    }
                }
                for i in 0..D {
                    advance(&self.steps[i], &mut xt[i], &mut vt[i], &noise.x[i], &noise.v[i]);
                }
                for r in 0..D {
                    x[r] = [0.0; L];
                    v[r] = [0.0; L];
                    for i in 0..D {
                        for l in 0..L {
                            x[r][l] += u[r][i] * xt[i][l];
                            v[r][l] += u[r][i] * vt[i][l];
                        }
                    }
                }
            }
        }
    }
}

/// Noise increment of `(X, V)` in the eigenbasis of the friction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Noise<const D: usize, const L: usize> {
    x: [[f64; L]; D],
    v: [[f64; L]; D],
}

#[inline(always)]
fn advance<const L: usize>(s: &ScalarStep, x: &mut [f64; L], v: &mut [f64; L], xi_x: &[f64; L], xi_v: &[f64; L]) {
    for l in 0..L {
        x[l] += s.drift * v[l] + xi_x[l];
        v[l] = s.decay * v[l] + xi_v[l];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_matches_closed_form_at_unit_friction() {
        let t: f64 = 10.0;
        let (vx, _, vv) = ou_covariance(1.0, t);
        assert!((vx - (2.0 * t + 4.0 * (-t).exp() - (-2.0 * t).exp() - 3.0)).abs() < 1e-12);
        assert!((vv - (1.0 - (-2.0 * t).exp())).abs() < 1e-15);
    }

    #[test]
    fn small_steps_keep_positive_variance() {
        for h in [1e-2, 1e-4, 1e-6] {
            let (vx, c, vv) = ou_covariance(2.0, h);
            assert!(vx > 0.0 && vv > 0.0);
            assert!(vx * vv - c * c > 0.0);
            // leading order (2/3) l h^3
            assert!((vx / (4.0 / 3.0 * h.powi(3)) - 1.0).abs() < 10.0 * h);
        }
    }

    #[test]
    fn two_half_step_increments_compose_to_one_step() {
        let (l, h) = (1.7, 0.3);
        let fine = ScalarStep::new(l, 0.5 * h);
        let (vx, c, vv) = ou_covariance(l, 0.5 * h);
        // first increment propagated by the fine transition, plus the second
        let cx = vx + 2.0 * fine.drift * c + fine.drift * fine.drift * vv + vx;
        let cc = fine.decay * (c + fine.drift * vv) + c;
        let cv = fine.decay * fine.decay * vv + vv;
        let (ex, ec, ev) = ou_covariance(l, h);
        assert!((cx - ex).abs() < 1e-14 && (cc - ec).abs() < 1e-14 && (cv - ev).abs() < 1e-14);
    }
}
