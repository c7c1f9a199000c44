//! Restarted, right-preconditioned GMRES over complex vectors.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    /// Relative residual target `||b - A x|| <= tol ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-10,
            max_iter: 2000,
            restart: 120,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual after every inner iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = a.norm() / r;
    let s = (a / a.norm()) * b.conj() / r;
    (c, s)
}

/// Solve `A x = b` with right preconditioner `M^{-1}`.
pub fn gmres<A, M>(apply: A, precond: M, b: &[Complex64], x0: Option<&[Complex64]>, cfg: &GmresConfig) -> GmresOutcome
where
    A: Fn(&[Complex64], &mut [Complex64]),
    M: Fn(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![ZERO; n]);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|c| *c = ZERO);
        return GmresOutcome {
            x,
            iterations: 0,
            residual_history: vec![0.0],
            converged: true,
        };
    }
    let m = cfg.restart.max(1).min(n.max(1));
    let mut iterations = 0usize;
    let mut r = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    loop {
        apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        history.push(beta / bnorm);
        if beta <= cfg.tol * bnorm {
            return GmresOutcome {
                x,
                iterations,
                residual_history: history,
                converged: true,
            };
        }
        if iterations >= cfg.max_iter {
            return GmresOutcome {
                x,
                iterations,
                residual_history: history,
                converged: false,
            };
        }
        let mut v: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|c| c / beta).collect());
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < cfg.max_iter {
            let mut zk = vec![ZERO; n];
            precond(&v[k], &mut zk);
            apply(&zk, &mut w);
            z.push(zk);
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _ in 0..2 {
                for i in 0..=k {
                    let hij = dot(&v[i], &w);
                    h[i][k] += hij;
                    for (wj, vj) in w.iter_mut().zip(&v[i]) {
                        *wj -= hij * vj;
                    }
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = Complex64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i].conj() * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k + 1][k];
            h[k + 1][k] = ZERO;
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            iterations += 1;
            k += 1;
            let res = g[k].norm();
            history.push(res / bnorm);
            if res <= cfg.tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|c| c / hn).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xj, zj) in x.iter_mut().zip(zi) {
                *xj += yi * zj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let n = 30;
        let a = |x: &[Complex64], y: &mut [Complex64]| {
            for i in 0..n {
                let mut acc = x[i] * Complex64::new(3.0 + i as f64 * 0.1, 0.5);
                if i > 0 {
                    acc += x[i - 1] * Complex64::new(-1.0, 0.2);
                }
                if i + 1 < n {
                    acc += x[i + 1] * Complex64::new(0.4, -1.0);
                }
                y[i] = acc;
            }
        };
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let cfg = GmresConfig {
            tol: 1e-12,
            max_iter: 200,
            restart: 7,
        };
        let out = gmres(a, |r: &[Complex64], z: &mut [Complex64]| z.copy_from_slice(r), &b, None, &cfg);
        assert!(out.converged);
        let mut ax = vec![ZERO; n];
        a(&out.x, &mut ax);
        let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        assert!(res <= 1e-11 * norm(&b));
        assert!(out.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-3)));
    }
}
