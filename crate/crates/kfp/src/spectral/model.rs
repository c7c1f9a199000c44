//! Periodic potential, friction matrix and the invariant measure.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::layout::MAX_DIM;
use super::SpectralError;

/// One term `amplitude * cos(2 pi k.x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineTerm {
    pub k: Vec<i32>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Trigonometric-polynomial potential `H` on the unit torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    dim: usize,
    terms: Vec<CosineTerm>,
}

impl Potential {
    pub fn new(dim: usize, terms: Vec<CosineTerm>) -> Result<Self, SpectralError> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(SpectralError::InvalidInput(format!(
                "dimension {dim} outside 1..=3"
            )));
        }
        for t in &terms {
            if t.k.len() != dim {
                return Err(SpectralError::InvalidInput(format!(
                    "wavevector {:?} does not have {dim} components",
                    t.k
                )));
            }
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(SpectralError::InvalidInput("non-finite potential term".into()));
            }
        }
        Ok(Potential { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        Potential {
            dim,
            terms: Vec::new(),
        }
    }

    /// `lambda * cos(2 pi x_1)`.
    pub fn cosine(dim: usize, lambda: f64) -> Self {
        let mut k = vec![0; dim];
        k[0] = 1;
        Potential {
            dim,
            terms: vec![CosineTerm {
                k,
                amplitude: lambda,
                phase: 0.0,
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn terms(&self) -> &[CosineTerm] {
        &self.terms
    }
    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0 || t.k.iter().all(|&k| k == 0))
    }

    /// Largest `|k|_inf` carried by a nonconstant term.
    pub fn bandwidth(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.amplitude != 0.0)
            .map(|t| t.k.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * (TAU * dot(&t.k, x) + t.phase).cos())
            .sum()
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        out[..self.dim].iter_mut().for_each(|g| *g = 0.0);
        for t in &self.terms {
            let s = -t.amplitude * TAU * (TAU * dot(&t.k, x) + t.phase).sin();
            for j in 0..self.dim {
                out[j] += s * t.k[j] as f64;
            }
        }
    }

    /// Upper bound on `sup |grad H|`, exact for a single cosine.
    pub fn grad_sup(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let kn: f64 = t.k.iter().map(|&k| (k as f64).powi(2)).sum::<f64>().sqrt();
                t.amplitude.abs() * TAU * kn
            })
            .sum()
    }

    /// Fourier coefficients `H = sum_k h_k e^{2 pi i k.x}`.
    pub fn fourier(&self) -> BTreeMap<[i32; MAX_DIM], Complex64> {
        let mut map = BTreeMap::new();
        for t in &self.terms {
            let mut k = [0i32; MAX_DIM];
            k[..self.dim].copy_from_slice(&t.k);
            let mk = neg(&k);
            let half = Complex64::from_polar(0.5 * t.amplitude, t.phase);
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += half;
            *map.entry(mk).or_insert(Complex64::new(0.0, 0.0)) += half.conj();
        }
        map.retain(|_, c| c.norm() > 0.0);
        map
    }

    /// Fourier coefficients of `partial_j H`.
    pub fn grad_fourier(&self, j: usize) -> Vec<([i32; MAX_DIM], Complex64)> {
        self.fourier()
            .into_iter()
            .filter(|(k, _)| k[j] != 0)
            .map(|(k, h)| (k, Complex64::new(0.0, TAU * k[j] as f64) * h))
            .collect()
    }

    /// Canonical byte encoding used for cache keys.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.dim as u8];
        for (k, c) in self.fourier() {
            for kj in k {
                out.extend_from_slice(&kj.to_le_bytes());
            }
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }
}

fn dot(k: &[i32], x: &[f64]) -> f64 {
    k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum()
}

fn neg(k: &[i32; MAX_DIM]) -> [i32; MAX_DIM] {
    [-k[0], -k[1], -k[2]]
}

/// One modulation term `amplitude * cos(2 pi k.x + phase)` of the friction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionTerm {
    pub k: Vec<i32>,
    pub amplitude: Vec<Vec<f64>>,
    #[serde(default)]
    pub phase: f64,
}

/// Symmetric positive-definite friction matrix, constant or modulated in x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Friction {
    dim: usize,
    mean: Vec<Vec<f64>>,
    #[serde(default)]
    terms: Vec<FrictionTerm>,
}

impl Friction {
    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, s: f64) -> Self {
        let mean = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { s } else { 0.0 }).collect())
            .collect();
        Friction {
            dim,
            mean,
            terms: Vec::new(),
        }
    }

    pub fn constant(mean: Vec<Vec<f64>>) -> Result<Self, SpectralError> {
        Self::new(mean, Vec::new())
    }

    pub fn new(mean: Vec<Vec<f64>>, terms: Vec<FrictionTerm>) -> Result<Self, SpectralError> {
        let dim = mean.len();
        let f = Friction { dim, mean, terms };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let dim = self.dim;
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(SpectralError::InvalidInput("friction dimension".into()));
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == dim && m.iter().all(|r| r.len() == dim);
        if !square(&self.mean) || !self.terms.iter().all(|t| square(&t.amplitude)) {
            return Err(SpectralError::InvalidInput("friction matrix shape".into()));
        }
        for t in &self.terms {
            if t.k.len() != dim {
                return Err(SpectralError::InvalidInput("friction wavevector".into()));
            }
        }
        let sym = |m: &Vec<Vec<f64>>| {
            (0..dim).all(|i| (0..dim).all(|j| (m[i][j] - m[j][i]).abs() <= 1e-14 * (1.0 + m[i][j].abs())))
        };
        if !sym(&self.mean) || !self.terms.iter().all(|t| sym(&t.amplitude)) {
            return Err(SpectralError::InvalidInput("friction must be symmetric".into()));
        }
        // Positive definiteness on a sampling grid fine enough for the modulation.
        let bw = self
            .terms
            .iter()
            .map(|t| t.k.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0) as usize;
        let m = if self.terms.is_empty() { 1 } else { 8 * bw + 8 };
        let npts = m.pow(dim as u32);
        let mut x = vec![0.0; dim];
        for flat in 0..npts {
            let mut r = flat;
            for xj in x.iter_mut() {
                *xj = (r % m) as f64 / m as f64;
                r /= m;
            }
            let a = self.matrix_at(&x);
            let ev = SymmetricEigen::new(a).eigenvalues;
            if ev.iter().any(|&e| !(e > 0.0)) {
                return Err(SpectralError::InvalidInput(format!(
                    "friction not positive definite at x = {x:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude.iter().flatten().all(|&a| a == 0.0))
    }
    pub fn mean(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.mean[i][j])
    }
    pub fn mean_rows(&self) -> &[Vec<f64>] {
        &self.mean
    }
    pub fn terms(&self) -> &[FrictionTerm] {
        &self.terms
    }

    pub fn matrix_at(&self, x: &[f64]) -> DMatrix<f64> {
        let mut a = self.mean();
        for t in &self.terms {
            let c = (TAU * dot(&t.k, x) + t.phase).cos();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    a[(i, j)] += c * t.amplitude[i][j];
                }
            }
        }
        a
    }

    /// Fourier coefficients of the entry `a_ij`.
    pub fn entry_fourier(&self, i: usize, j: usize) -> Vec<([i32; MAX_DIM], Complex64)> {
        let mut map: BTreeMap<[i32; MAX_DIM], Complex64> = BTreeMap::new();
        if self.mean[i][j] != 0.0 {
            map.insert([0; MAX_DIM], Complex64::new(self.mean[i][j], 0.0));
        }
        for t in &self.terms {
            let amp = t.amplitude[i][j];
            if amp == 0.0 {
                continue;
            }
            let mut k = [0i32; MAX_DIM];
            k[..self.dim].copy_from_slice(&t.k);
            let half = Complex64::from_polar(0.5 * amp, t.phase);
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += half;
            *map.entry(neg(&k)).or_insert(Complex64::new(0.0, 0.0)) += half.conj();
        }
        map.retain(|_, c| c.norm() > 0.0);
        map.into_iter().collect()
    }

    /// Largest operator norm over a sampling grid.
    pub fn norm_sup(&self) -> f64 {
        if self.is_constant() {
            return SymmetricEigen::new(self.mean()).eigenvalues.max();
        }
        let m = 32usize;
        let npts = m.pow(self.dim as u32);
        let mut best: f64 = 0.0;
        let mut x = vec![0.0; self.dim];
        for flat in 0..npts {
            let mut r = flat;
            for xj in x.iter_mut() {
                *xj = (r % m) as f64 / m as f64;
                r /= m;
            }
            best = best.max(SymmetricEigen::new(self.matrix_at(&x)).eigenvalues.max());
        }
        best
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.dim as u8];
        for row in &self.mean {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for t in &self.terms {
            for k in &t.k {
                out.extend_from_slice(&k.to_le_bytes());
            }
            for row in &t.amplitude {
                for v in row {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            out.extend_from_slice(&t.phase.to_le_bytes());
        }
        out
    }
}

/// Fourier coefficients on the cube `|q|_inf <= qmax`, dense.
#[derive(Debug, Clone)]
pub struct FourierTable {
    dim: usize,
    qmax: usize,
    coeffs: Vec<Complex64>,
}

impl FourierTable {
    pub fn get(&self, q: &[i32]) -> Complex64 {
        let side = 2 * self.qmax + 1;
        let mut flat = 0usize;
        for &qj in q.iter().take(self.dim) {
            if qj.unsigned_abs() as usize > self.qmax {
                return Complex64::new(0.0, 0.0);
            }
            flat = flat * side + (qj + self.qmax as i32) as usize;
        }
        self.coeffs[flat]
    }
    pub fn qmax(&self) -> usize {
        self.qmax
    }
}

/// Fourier coefficients `c_q = int f(x) e^{-2 pi i q.x} dx` of a smooth
/// periodic function, from `m` samples per axis.
pub fn sample_fourier(dim: usize, m: usize, qmax: usize, f: impl Fn(&[f64]) -> f64) -> FourierTable {
    let npts = m.pow(dim as u32);
    let mut data: Vec<Complex64> = Vec::with_capacity(npts);
    let mut x = vec![0.0; dim];
    for flat in 0..npts {
        let mut r = flat;
        for j in (0..dim).rev() {
            x[j] = (r % m) as f64 / m as f64;
            r /= m;
        }
        data.push(Complex64::new(f(&x), 0.0));
    }
    let side = 2 * qmax + 1;
    let twiddle: Vec<Vec<Complex64>> = (0..side)
        .map(|qi| {
            let q = qi as f64 - qmax as f64;
            (0..m)
                .map(|s| Complex64::from_polar(1.0 / m as f64, -TAU * q * s as f64 / m as f64))
                .collect()
        })
        .collect();
    // Axis-by-axis transform; `shape` tracks the current extents.
    let mut shape: Vec<usize> = vec![m; dim];
    for axis in 0..dim {
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let n = shape[axis];
        let mut next = vec![Complex64::new(0.0, 0.0); outer * side * inner];
        for o in 0..outer {
            for (qi, tw) in twiddle.iter().enumerate() {
                for i in 0..inner {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (s, w) in tw.iter().enumerate().take(n) {
                        acc += w * data[(o * n + s) * inner + i];
                    }
                    next[(o * side + qi) * inner + i] = acc;
                }
            }
        }
        shape[axis] = side;
        data = next;
    }
    FourierTable {
        dim,
        qmax,
        coeffs: data,
    }
}

/// Potential and friction together with the Gibbs weight
/// `rho = e^{-H} / Z` on the torus.
#[derive(Debug, Clone)]
pub struct Model {
    pub potential: Potential,
    pub friction: Friction,
    log_z: f64,
}

impl Model {
    pub fn new(potential: Potential, friction: Friction) -> Result<Self, SpectralError> {
        if potential.dim() != friction.dim() {
            return Err(SpectralError::DimensionMismatch {
                expected: potential.dim(),
                found: friction.dim(),
            });
        }
        friction.validate()?;
        let dim = potential.dim();
        let m = Self::grid_size(&potential, 0);
        let table = sample_fourier(dim, m, 0, |x| (-potential.value(x)).exp());
        let z = table.get(&[0; MAX_DIM]).re;
        Ok(Model {
            potential,
            friction,
            log_z: z.ln(),
        })
    }

    pub fn free(dim: usize) -> Self {
        Model::new(Potential::zero(dim), Friction::identity(dim)).expect("free model")
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    /// Normalizing constant `int e^{-H} dx`.
    pub fn partition(&self) -> f64 {
        self.log_z.exp()
    }

    fn grid_size(potential: &Potential, qmax: usize) -> usize {
        let bw = potential.bandwidth().max(1);
        let amp: f64 = potential.terms().iter().map(|t| t.amplitude.abs()).sum();
        (2 * qmax + bw * (48 + 4 * amp.ceil() as usize)).max(32)
    }

    /// Fourier coefficients of the normalized weight `rho`, `|q|_inf <= qmax`.
    pub fn weight_table(&self, qmax: usize) -> FourierTable {
        let m = Self::grid_size(&self.potential, qmax);
        let log_z = self.log_z;
        sample_fourier(self.dim(), m, qmax, |x| (-self.potential.value(x) - log_z).exp())
    }

    /// Normalized weight `rho(x)`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        (-self.potential.value(x) - self.log_z).exp()
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = self.potential.canonical_bytes();
        out.extend(self.friction.canonical_bytes());
        out
    }
}
