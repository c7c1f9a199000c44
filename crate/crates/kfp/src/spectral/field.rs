//! Coefficient storage for functions on the torus times velocity space.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::TAU;
use std::sync::Arc;

use super::layout::{Layout, MAX_DIM};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `f(x, v) = sum_{k, n} c_{k, n} e^{2 pi i k.x} e_n(v)` with `e_n` the
/// orthonormal probabilists' Hermite polynomials in `L^2(gamma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    layout: Arc<Layout>,
    coeffs: Vec<Complex64>,
}

/// Orthonormal Hermite values `e_0(v), ..., e_n(v)`.
pub fn hermite_values(v: f64, n: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(1.0);
    if n >= 1 {
        h.push(v);
    }
    for m in 1..n {
        let next = (v * h[m] - (m as f64).sqrt() * h[m - 1]) / ((m + 1) as f64).sqrt();
        h.push(next);
    }
    h
}

impl PhaseField {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let n = layout.len();
        PhaseField {
            layout,
            coeffs: vec![ZERO; n],
        }
    }

    pub fn from_coeffs(layout: Arc<Layout>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), layout.len(), "coefficient count mismatch");
        PhaseField { layout, coeffs }
    }

    pub fn constant(layout: Arc<Layout>, c: f64) -> Self {
        let mut f = Self::zeros(layout);
        let p = f.layout.flat(f.layout.zero_mode(), 0);
        f.coeffs[p] = Complex64::new(c, 0.0);
        f
    }

    /// The function `v_j`.
    pub fn velocity(layout: Arc<Layout>, j: usize) -> Self {
        let mut f = Self::zeros(layout);
        let h = f.layout.herm_unit(j).expect("velocity cut at least 1");
        let p = f.layout.flat(f.layout.zero_mode(), h);
        f.coeffs[p] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, mode: usize, herm: usize) -> Complex64 {
        self.coeffs[self.layout.flat(mode, herm)]
    }

    pub fn set(&mut self, mode: usize, herm: usize, c: Complex64) {
        let p = self.layout.flat(mode, herm);
        self.coeffs[p] = c;
    }

    /// Coefficient at wavevector `k` and Hermite index `n`; zero outside the cut.
    pub fn coeff(&self, k: &[i32], n: &[i64]) -> Complex64 {
        match (self.layout.mode_pos(k), self.layout.herm_pos(n)) {
            (Some(m), Some(h)) => self.get(m, h),
            _ => ZERO,
        }
    }

    /// Flat `L^2(dx x gamma)` inner product `sum conj(a) b`.
    pub fn inner_flat(&self, other: &PhaseField) -> Complex64 {
        assert!(self.layout == other.layout, "layout mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_flat(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    /// `self += s * other`, embedding `other` into this layout.
    pub fn axpy(&mut self, s: f64, other: &PhaseField) {
        if self.layout == other.layout {
            for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
                *a += b * s;
            }
        } else {
            let o = other.recut(self.layout.clone());
            for (a, b) in self.coeffs.iter_mut().zip(&o.coeffs) {
                *a += b * s;
            }
        }
    }

    pub fn sub(&self, other: &PhaseField) -> PhaseField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Embedding into (or truncation onto) another layout of the same dimension.
    pub fn recut(&self, target: Arc<Layout>) -> PhaseField {
        assert_eq!(target.dim(), self.layout.dim());
        if *target == *self.layout {
            return PhaseField {
                layout: target,
                coeffs: self.coeffs.clone(),
            };
        }
        let mut out = PhaseField::zeros(target);
        let src = &self.layout;
        let nh = src.n_herm().min(out.layout.n_herm());
        for (mi, k) in src.modes().iter().enumerate() {
            if let Some(mo) = out.layout.mode_pos(k) {
                // Graded Hermite order makes the smaller cut a prefix.
                for h in 0..nh {
                    let c = self.get(mi, h);
                    out.set(mo, h, c);
                }
            }
        }
        out
    }

    /// Exact product with `v_j`; the result lives on the cut `nv + 1`.
    pub fn mul_v(&self, j: usize) -> PhaseField {
        let l = &self.layout;
        let target = Arc::new(l.with_cuts(l.nx(), l.nv() + 1));
        self.mul_v_into(j, target)
    }

    /// Product with `v_j = A_j + A_j^+` projected onto `target`.
    pub fn mul_v_into(&self, j: usize, target: Arc<Layout>) -> PhaseField {
        let l = &self.layout;
        let mut out = PhaseField::zeros(target);
        for (mi, k) in l.modes().iter().enumerate() {
            let Some(mo) = out.layout.mode_pos(k) else {
                continue;
            };
            for (hi, n) in l.hermite().iter().enumerate() {
                let c = self.get(mi, hi);
                if c == ZERO {
                    continue;
                }
                let mut m: [i64; MAX_DIM] = [n[0] as i64, n[1] as i64, n[2] as i64];
                let nj = m[j] as f64;
                m[j] += 1;
                if let Some(ho) = out.layout.herm_pos(&m) {
                    let p = out.layout.flat(mo, ho);
                    out.coeffs[p] += c * (nj + 1.0).sqrt();
                }
                m[j] -= 2;
                if m[j] >= 0 {
                    if let Some(ho) = out.layout.herm_pos(&m) {
                        let p = out.layout.flat(mo, ho);
                        out.coeffs[p] += c * nj.sqrt();
                    }
                }
            }
        }
        out
    }

    /// Fourier coefficients of the x-function multiplying `e_n`.
    pub fn hermite_component(&self, herm: usize) -> Vec<Complex64> {
        (0..self.layout.n_modes()).map(|m| self.get(m, herm)).collect()
    }

    /// Restore `c(-k, n) = conj c(k, n)` by averaging.
    pub fn enforce_real(&mut self) {
        let l = self.layout.clone();
        let nh = l.n_herm();
        for (mi, k) in l.modes().iter().enumerate() {
            let mk = [-k[0], -k[1], -k[2]];
            let mj = l.mode_pos(&mk).expect("symmetric cut");
            if mj < mi {
                continue;
            }
            for h in 0..nh {
                let a = self.coeffs[mi * nh + h];
                let b = self.coeffs[mj * nh + h];
                let avg = 0.5 * (a + b.conj());
                self.coeffs[mi * nh + h] = avg;
                self.coeffs[mj * nh + h] = avg.conj();
            }
        }
    }

    /// Largest violation of the reality constraint.
    pub fn reality_defect(&self) -> f64 {
        let l = &self.layout;
        let nh = l.n_herm();
        let mut worst: f64 = 0.0;
        for (mi, k) in l.modes().iter().enumerate() {
            let mj = l.mode_pos(&[-k[0], -k[1], -k[2]]).expect("symmetric cut");
            for h in 0..nh {
                worst = worst.max((self.coeffs[mi * nh + h] - self.coeffs[mj * nh + h].conj()).norm());
            }
        }
        worst
    }

    fn plane_waves(&self, x: &[f64]) -> Vec<Complex64> {
        let l = &self.layout;
        let nx = l.nx() as i32;
        let dim = l.dim();
        let base: Vec<Vec<Complex64>> = (0..dim)
            .map(|j| (-nx..=nx).map(|k| Complex64::from_polar(1.0, TAU * k as f64 * x[j])).collect())
            .collect();
        l.modes()
            .iter()
            .map(|k| (0..dim).map(|j| base[j][(k[j] + nx) as usize]).product())
            .collect()
    }

    /// Hermite coefficients of `v -> f(x, v)` and their x-gradients.
    pub fn local(&self, x: &[f64]) -> (Vec<f64>, Vec<[f64; MAX_DIM]>) {
        let l = &self.layout;
        let nh = l.n_herm();
        let waves = self.plane_waves(x);
        let mut vals = vec![0.0; nh];
        let mut grads = vec![[0.0; MAX_DIM]; nh];
        for (mi, k) in l.modes().iter().enumerate() {
            let w = waves[mi];
            let row = &self.coeffs[mi * nh..(mi + 1) * nh];
            for h in 0..nh {
                let t = row[h] * w;
                vals[h] += t.re;
                for j in 0..l.dim() {
                    // d/dx_j of e^{2 pi i k x} is 2 pi i k_j times itself.
                    grads[h][j] -= TAU * k[j] as f64 * t.im;
                }
            }
        }
        (vals, grads)
    }

    /// Real-part evaluation of `f(x, v)`.
    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        let (vals, _) = self.local(x);
        let l = &self.layout;
        let tables: Vec<Vec<f64>> = (0..l.dim()).map(|j| hermite_values(v[j], l.nv())).collect();
        l.hermite()
            .iter()
            .zip(&vals)
            .map(|(n, c)| c * (0..l.dim()).map(|j| tables[j][n[j] as usize]).product::<f64>())
            .sum()
    }

    /// Random real field with coefficients decaying like `decay^(|k|_1 + |n|_1)`.
    pub fn random_real<R: Rng>(layout: Arc<Layout>, rng: &mut R, decay: f64) -> Self {
        let mut f = PhaseField::zeros(layout);
        let l = f.layout.clone();
        for (mi, k) in l.modes().iter().enumerate() {
            let kk: i32 = k.iter().map(|x| x.abs()).sum();
            for (hi, n) in l.hermite().iter().enumerate() {
                let nn: i32 = n.iter().map(|&x| x as i32).sum();
                let s = decay.powi(kk + nn);
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * s;
                f.set(mi, hi, c);
            }
        }
        f.enforce_real();
        f
    }
}
