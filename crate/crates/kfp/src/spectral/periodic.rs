//! Truncated Fourier series of x alone.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::Arc;

use super::field::PhaseField;
use super::layout::{Layout, MAX_DIM};
use super::model::FourierTable;

/// Real periodic function stored by its Fourier coefficients on `|k|_inf <= nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    modes: Arc<Layout>,
    coeffs: Vec<Complex64>,
}

impl PeriodicField {
    pub fn zeros(dim: usize, nx: usize) -> Self {
        let modes = Arc::new(Layout::new(dim, nx, 0));
        let n = modes.n_modes();
        PeriodicField {
            modes,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// The x-coefficient of the Hermite function at position `herm`.
    pub fn hermite_component(f: &PhaseField, herm: usize) -> Self {
        let l = f.layout();
        let mut out = Self::zeros(l.dim(), l.nx());
        for m in 0..l.n_modes() {
            out.coeffs[m] = f.get(m, herm);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.modes.dim()
    }

    pub fn nx(&self) -> usize {
        self.modes.nx()
    }

    pub fn modes(&self) -> &[[i32; MAX_DIM]] {
        self.modes.modes()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, k: &[i32]) -> Complex64 {
        self.modes.mode_pos(k).map(|p| self.coeffs[p]).unwrap_or_default()
    }

    pub fn axpy(&mut self, s: f64, other: &PeriodicField) {
        assert_eq!(self.modes, other.modes, "mismatched cuts");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        let z = self.modes.zero_mode();
        self.coeffs[z] += c;
    }

    /// Value and gradient at `x`.
    pub fn eval_grad(&self, x: &[f64]) -> (f64, [f64; MAX_DIM]) {
        let dim = self.dim();
        let mut val = 0.0;
        let mut grad = [0.0; MAX_DIM];
        for (k, c) in self.modes.modes().iter().zip(&self.coeffs) {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let phase: f64 = (0..dim).map(|j| TAU * k[j] as f64 * x[j]).sum();
            let t = c * Complex64::from_polar(1.0, phase);
            val += t.re;
            for j in 0..dim {
                grad[j] -= TAU * k[j] as f64 * t.im;
            }
        }
        (val, grad)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_grad(x).0
    }

    /// `int f dsigma` against a normalized weight table.
    pub fn weighted_mean(&self, weight: &FourierTable) -> f64 {
        self.modes
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| (c * weight.get(&[-k[0], -k[1], -k[2]])).re)
            .sum()
    }

    /// Uniform-measure mean over the unit cell.
    pub fn mean(&self) -> f64 {
        self.coeffs[self.modes.zero_mode()].re
    }
}

/// Points of the uniform grid with `n` nodes per direction on `[0, 1)^dim`.
pub fn unit_grid(dim: usize, n: usize) -> Vec<[f64; MAX_DIM]> {
    let total = n.pow(dim as u32);
    (0..total)
        .map(|flat| {
            let mut x = [0.0; MAX_DIM];
            let mut r = flat;
            for xj in x.iter_mut().take(dim) {
                *xj = (r % n) as f64 / n as f64;
                r /= n;
            }
            x
        })
        .collect()
}
