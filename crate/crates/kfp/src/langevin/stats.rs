//! Batch moment sums, histograms and the statistical checks built on them.

use serde::{Deserialize, Serialize};

use crate::spectral::MAX_DIM;

/// Sums over the trajectories of one batch at one time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub sum_x: [f64; MAX_DIM],
    pub sum_v: [f64; MAX_DIM],
    /// Row-major `sum x x^T`.
    pub sum_xx: [f64; MAX_DIM * MAX_DIM],
    pub sum_vv: [f64; MAX_DIM * MAX_DIM],
}

impl Moments {
    pub fn push(&mut self, x: &[f64], v: &[f64]) {
        let d = x.len();
        self.count += 1;
        for i in 0..d {
            self.sum_x[i] += x[i];
            self.sum_v[i] += v[i];
            for j in 0..d {
                self.sum_xx[i * MAX_DIM + j] += x[i] * x[j];
                self.sum_vv[i * MAX_DIM + j] += v[i] * v[j];
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        for i in 0..MAX_DIM {
            self.sum_x[i] += other.sum_x[i];
            self.sum_v[i] += other.sum_v[i];
        }
        for i in 0..MAX_DIM * MAX_DIM {
            self.sum_xx[i] += other.sum_xx[i];
            self.sum_vv[i] += other.sum_vv[i];
        }
    }

    fn subtract(&mut self, other: &Moments) {
        self.count -= other.count;
        for i in 0..MAX_DIM {
            self.sum_x[i] -= other.sum_x[i];
            self.sum_v[i] -= other.sum_v[i];
        }
        for i in 0..MAX_DIM * MAX_DIM {
            self.sum_xx[i] -= other.sum_xx[i];
            self.sum_vv[i] -= other.sum_vv[i];
        }
    }

    /// Sample covariance of `X` (divisor `n`).
    pub fn cov_x(&self, i: usize, j: usize) -> f64 {
        let n = self.count as f64;
        self.sum_xx[i * MAX_DIM + j] / n - self.sum_x[i] * self.sum_x[j] / (n * n)
    }

    pub fn cov_v(&self, i: usize, j: usize) -> f64 {
        let n = self.count as f64;
        self.sum_vv[i * MAX_DIM + j] / n - self.sum_v[i] * self.sum_v[j] / (n * n)
    }

    /// `E[X_i X_j]`.
    pub fn second_x(&self, i: usize, j: usize) -> f64 {
        self.sum_xx[i * MAX_DIM + j] / self.count as f64
    }

    pub fn second_v(&self, i: usize, j: usize) -> f64 {
        self.sum_vv[i * MAX_DIM + j] / self.count as f64
    }
}

/// Delete-one-group jackknife. `groups[b][t]` holds the sums of group `b`
/// at the `t`-th time of interest; `stat` sees the pooled sums per time.
/// Returns the full-sample estimate and its standard error.
pub fn jackknife<F>(groups: &[Vec<Moments>], mut stat: F) -> (f64, f64)
where
    F: FnMut(&[Moments]) -> f64,
{
    let nt = groups.first().map_or(0, |g| g.len());
    let mut total = vec![Moments::default(); nt];
    for g in groups {
        for (t, m) in total.iter_mut().zip(g) {
            t.merge(m);
        }
    }
    let full = stat(&total);
    let b = groups.len();
    if b < 2 {
        return (full, f64::NAN);
    }
    let leave: Vec<f64> = groups
        .iter()
        .map(|g| {
            let mut m = total.clone();
            for (t, gm) in m.iter_mut().zip(g) {
                t.subtract(gm);
            }
            stat(&m)
        })
        .collect();
    let mean = leave.iter().sum::<f64>() / b as f64;
    let var = leave.iter().map(|t| (t - mean).powi(2)).sum::<f64>() * (b - 1) as f64 / b as f64;
    (full, var.sqrt())
}

/// Uniform bins on `[lo, hi)` plus out-of-range counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0);
        Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            below: 0,
            above: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn push(&mut self, x: f64) {
        if x < self.lo {
            self.below += 1;
        } else if x >= self.hi {
            self.above += 1;
        } else {
            let last = self.bins() - 1;
            let i = ((x - self.lo) / self.width()) as usize;
            self.counts[i.min(last)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.below += other.below;
        self.above += other.above;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }

    /// Bin masses followed by the two out-of-range masses; sums to one.
    pub fn masses(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.counts
            .iter()
            .chain([&self.below, &self.above])
            .map(|&c| c as f64 / n)
            .collect()
    }

    /// Density estimate per bin.
    pub fn density(&self) -> Vec<f64> {
        let n = self.total() as f64;
        let w = self.width();
        self.counts.iter().map(|&c| c as f64 / (n * w)).collect()
    }

    /// Standard error of each density value (binomial counts).
    pub fn density_se(&self) -> Vec<f64> {
        let n = self.total() as f64;
        let w = self.width();
        self.counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                (p * (1.0 - p) / n).sqrt() / w
            })
            .collect()
    }

    /// Empirical CDF at the right edge of each bin.
    pub fn cdf_edges(&self) -> Vec<(f64, f64)> {
        let n = self.total() as f64;
        let mut acc = self.below as f64;
        (0..self.bins())
            .map(|i| {
                acc += self.counts[i] as f64;
                (self.lo + (i + 1) as f64 * self.width(), acc / n)
            })
            .collect()
    }
}

/// Two-dimensional histogram of `(x, v)`, row-major in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2 {
    pub x: (f64, f64, usize),
    pub v: (f64, f64, usize),
    pub counts: Vec<u64>,
    pub outside: u64,
}

impl Histogram2 {
    pub fn new(x: (f64, f64, usize), v: (f64, f64, usize)) -> Self {
        Histogram2 {
            counts: vec![0; x.2 * v.2],
            x,
            v,
            outside: 0,
        }
    }

    fn index(range: (f64, f64, usize), y: f64) -> Option<usize> {
        if y < range.0 || y >= range.1 {
            return None;
        }
        let i = ((y - range.0) / (range.1 - range.0) * range.2 as f64) as usize;
        Some(i.min(range.2 - 1))
    }

    pub fn push(&mut self, x: f64, v: f64) {
        match (Self::index(self.x, x), Self::index(self.v, v)) {
            (Some(i), Some(j)) => self.counts[i * self.v.2 + j] += 1,
            _ => self.outside += 1,
        }
    }

    pub fn merge(&mut self, other: &Histogram2) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    pub fn cell_area(&self) -> f64 {
        (self.x.1 - self.x.0) / self.x.2 as f64 * (self.v.1 - self.v.0) / self.v.2 as f64
    }

    pub fn centers(&self, i: usize, j: usize) -> (f64, f64) {
        let wx = (self.x.1 - self.x.0) / self.x.2 as f64;
        let wv = (self.v.1 - self.v.0) / self.v.2 as f64;
        (self.x.0 + (i as f64 + 0.5) * wx, self.v.0 + (j as f64 + 0.5) * wv)
    }

    /// Density in `dx dv` per cell.
    pub fn density(&self) -> Vec<f64> {
        let n = self.total() as f64;
        let a = self.cell_area();
        self.counts.iter().map(|&c| c as f64 / (n * a)).collect()
    }
}

pub fn normal_cdf(x: f64, var: f64) -> f64 {
    0.5 * libm::erfc(-x / (2.0 * var).sqrt())
}

pub fn normal_pdf(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (std::f64::consts::TAU * var).sqrt()
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the one-sample KS statistic at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Mirror test for `x -> -x` on a histogram centred at zero: chi-square
/// statistic over mirrored bin pairs and its degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub chi_square: f64,
    pub dof: usize,
    /// `(chi_square - dof) / sqrt(2 dof)`.
    pub z_score: f64,
}

pub fn symmetry_check(h: &Histogram) -> SymmetryReport {
    assert!((h.lo + h.hi).abs() < 1e-12 * h.hi.abs().max(1.0), "histogram must be centred");
    let b = h.bins();
    let mut chi = 0.0;
    let mut dof = 0;
    for i in 0..b / 2 {
        let (a, c) = (h.counts[i] as f64, h.counts[b - 1 - i] as f64);
        if a + c > 0.0 {
            chi += (a - c).powi(2) / (a + c);
            dof += 1;
        }
    }
    let z = if dof == 0 { 0.0 } else { (chi - dof as f64) / (2.0 * dof as f64).sqrt() };
    SymmetryReport {
        chi_square: chi,
        dof,
        z_score: z,
    }
}
