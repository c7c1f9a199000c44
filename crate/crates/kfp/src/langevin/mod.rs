//! Langevin Monte Carlo reference for the position process.
//!
//! ```text
//! dX = V dt,   dV = (-a V + grad H(X)) dt + sqrt(2) a^{1/2} dW,   (X, V)(0) = (0, 0)
//! ```
//!
//! Each step is a half kick by the force, the exact Ornstein-Uhlenbeck flow
//! of `(X, V)` with constant friction, and another half kick. Trajectory `i`
//! draws from ChaCha8 stream `i` of the run seed, so results do not depend on
//! how trajectories are scheduled.

mod ou;
mod stats;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::spectral::{Model, MAX_DIM};
use ou::{Noise, OuFlow};

pub use ou::ou_covariance;
pub use stats::{
    jackknife, ks_critical, ks_statistic, normal_cdf, normal_pdf, symmetry_check, Histogram, Histogram2, Moments, SymmetryReport,
};

#[derive(Debug, Error)]
pub enum LangevinError {
    #[error("time step {dt} exceeds the stability bound {max}")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("the Monte Carlo integrator needs a constant friction matrix")]
    NonConstantFriction,
    #[error("mean-square displacement is not linear over the last half: slopes {early:.4} and {late:.4} (se {se:.2e})")]
    NotInLinearRegime { early: f64, late: f64, se: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Position histograms at recorded times. Position bins are aligned with the
/// unit lattice: the range is `[-R - 1/2, R + 1/2)` with `bins_per_cell`
/// bins per unit and `R = ceil(span * sqrt(2 t + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistogramSpec {
    pub bins_per_cell: usize,
    pub span: f64,
    pub v_bins: usize,
    pub v_half_width: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            bins_per_cell: 4,
            span: 6.0,
            v_bins: 24,
            v_half_width: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Spacing of recorded times; each is rounded to the nearest step.
    pub record_every: f64,
    /// Contiguous trajectory groups used for merging and jackknife errors.
    pub batches: usize,
    pub histogram: HistogramSpec,
    /// Keep the first position coordinate of every trajectory at every
    /// recorded time.
    pub keep_samples: bool,
}

impl LangevinConfig {
    /// Largest step allowed for `model`: `0.01 / max(1, |a|, sup |grad H|)`.
    pub fn max_step(model: &Model) -> f64 {
        0.01 / 1f64.max(model.friction.norm_sup()).max(model.potential.grad_sup())
    }

    /// A config at the largest allowed step.
    pub fn for_model(model: &Model, t_final: f64, n_traj: usize, seed: u64) -> Self {
        let max = Self::max_step(model);
        // a step that divides the unit of time evenly
        let dt = 1.0 / (1.0 / max).ceil();
        LangevinConfig {
            dt,
            t_final,
            n_traj,
            seed,
            record_every: 1.0,
            batches: 50,
            histogram: HistogramSpec::default(),
            keep_samples: false,
        }
    }
}

/// Output of [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub dim: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `moments[t][b]`: sums of batch `b` at `times[t]`.
    pub moments: Vec<Vec<Moments>>,
    /// Histogram of the first position coordinate per recorded time.
    pub hist_x: Vec<Histogram>,
    /// Histogram of the first position and velocity coordinates.
    pub hist_xv: Vec<Histogram2>,
    /// `samples[t][i]` when requested.
    pub samples: Option<Vec<Vec<f64>>>,
}

struct BatchOut {
    moments: Vec<Moments>,
    hist_x: Vec<Histogram>,
    hist_xv: Vec<Histogram2>,
    samples: Vec<Vec<f64>>,
}

fn histograms_at(t: f64, spec: &HistogramSpec) -> (Histogram, Histogram2) {
    let r = (spec.span * (2.0 * t + 1.0).sqrt()).ceil();
    let cells = 2 * r as usize + 1;
    let hx = Histogram::new(-r - 0.5, r + 0.5, cells * spec.bins_per_cell);
    let hxv = Histogram2::new((-r - 0.5, r + 0.5, cells), (-spec.v_half_width, spec.v_half_width, spec.v_bins));
    (hx, hxv)
}

/// `grad H` with wavevectors in cycles, so the phase can be reduced to one
/// period before the sine is taken.
struct Force {
    /// `(k, -2 pi amplitude, phase / 2 pi)`
    terms: Vec<([f64; MAX_DIM], f64, f64)>,
}

impl Force {
    fn new(model: &Model) -> Self {
        let terms = model
            .potential
            .terms()
            .iter()
            .filter(|t| t.amplitude != 0.0 && t.k.iter().any(|&k| k != 0))
            .map(|t| {
                let mut k = [0.0; MAX_DIM];
                for (kj, &tk) in k.iter_mut().zip(&t.k) {
                    *kj = tk as f64;
                }
                (k, -TAU * t.amplitude, t.phase / TAU)
            })
            .collect();
        Force { terms }
    }

    /// Force on `L` positions stored by coordinate.
    #[inline(always)]
    fn eval<const D: usize, const L: usize>(&self, x: &[[f64; L]; D], out: &mut [[f64; L]; D]) {
        *out = [[0.0; L]; D];
        for (k, amp, phase) in &self.terms {
            let mut c = [*phase; L];
            for j in 0..D {
                for l in 0..L {
                    c[l] += k[j] * x[j][l];
                }
            }
            let mut s = [0.0; L];
            for l in 0..L {
                s[l] = amp * sin_cycles(c[l] - round_nearest(c[l]));
            }
            for j in 0..D {
                for l in 0..L {
                    out[j][l] += s[l] * k[j];
                }
            }
        }
    }
}

/// Nearest integer for `|c| < 2^51`, ties to even.
#[inline(always)]
fn round_nearest(c: f64) -> f64 {
    const SHIFT: f64 = 6755399441055744.0;
    (c + SHIFT) - SHIFT
}

/// `sin(2 pi f)` for `|f| <= 1/2`, branch-free, accurate to a few ulp.
#[inline(always)]
fn sin_cycles(f: f64) -> f64 {
    // fold onto [-1/4, 1/4] using sin(pi - y) = sin(y)
    let g = if f.abs() > 0.25 { 0.5f64.copysign(f) - f } else { f };
    let y = TAU * g;
    let y2 = y * y;
    let mut p = 0.0;
    for c in SIN_TAYLOR.iter().rev() {
        p = p * y2 + c;
    }
    y * p
}

/// `(-1)^n / (2n + 1)!`
const SIN_TAYLOR: [f64; 11] = [
    1.0,
    -1.0 / 6.0,
    1.0 / 120.0,
    -1.0 / 5040.0,
    1.0 / 362880.0,
    -1.0 / 39916800.0,
    1.0 / 6227020800.0,
    -1.0 / 1307674368000.0,
    1.0 / 355687428096000.0,
    -1.0 / 121645100408832000.0,
    1.0 / 51090942171709440000.0,
];

/// Positions, velocities and forces of a lane group, stored by coordinate.
struct Lanes<const D: usize> {
    x: [[f64; LANES]; D],
    v: [[f64; LANES]; D],
    f: [[f64; LANES]; D],
}

impl<const D: usize> Lanes<D> {
    fn new(force: &Force) -> Self {
        let mut s = Lanes {
            x: [[0.0; LANES]; D],
            v: [[0.0; LANES]; D],
            f: [[0.0; LANES]; D],
        };
        force.eval(&s.x, &mut s.f);
        s
    }

    #[inline(always)]
    fn kick(&mut self, half: f64) {
        for j in 0..D {
            for l in 0..LANES {
                self.v[j][l] += half * self.f[j][l];
            }
        }
    }

    #[inline(always)]
    fn step(&mut self, flow: &OuFlow, force: &Force, half: f64, noise: &Noise<D, LANES>) {
        self.kick(half);
        flow.apply(&mut self.x, &mut self.v, noise);
        force.eval(&self.x, &mut self.f);
        self.kick(half);
    }

    fn record(&self, out: &mut BatchOut, ti: usize, live: usize, keep: bool) {
        for l in 0..live {
            let x: [f64; D] = std::array::from_fn(|j| self.x[j][l]);
            let v: [f64; D] = std::array::from_fn(|j| self.v[j][l]);
            out.moments[ti].push(&x, &v);
            out.hist_x[ti].push(x[0]);
            out.hist_xv[ti].push(x[0], v[0]);
            if keep {
                out.samples[ti].push(x[0]);
            }
        }
    }
}

#[inline(always)]
fn draw<const D: usize>(rngs: &mut [ChaCha8Rng; LANES]) -> ([[f64; LANES]; D], [[f64; LANES]; D]) {
    let mut zx = [[0.0; LANES]; D];
    let mut zv = [[0.0; LANES]; D];
    for (l, rng) in rngs.iter_mut().enumerate() {
        for j in 0..D {
            zv[j][l] = rng.sample(StandardNormal);
            zx[j][l] = rng.sample(StandardNormal);
        }
    }
    (zx, zv)
}

struct Shared<'a> {
    cfg: &'a LangevinConfig,
    force: Force,
    flow: OuFlow,
    /// Flow over half a step, for the refined companion run.
    fine: Option<OuFlow>,
    record_steps: Vec<usize>,
    empty: Vec<(Histogram, Histogram2)>,
}

/// Trajectories advanced in lockstep; their dependency chains interleave.
const LANES: usize = 8;

impl Shared<'_> {
    fn batch_out(&self, n: usize) -> BatchOut {
        let nt = self.record_steps.len();
        BatchOut {
            moments: vec![Moments::default(); nt],
            hist_x: self.empty.iter().map(|h| h.0.clone()).collect(),
            hist_xv: self.empty.iter().map(|h| h.1.clone()).collect(),
            samples: if self.cfg.keep_samples { vec![Vec::with_capacity(n); nt] } else { Vec::new() },
        }
    }

    fn run<const D: usize, const REFINE: bool>(&self, b: usize) -> (BatchOut, Option<BatchOut>) {
        let cfg = self.cfg;
        let lo = b * cfg.n_traj / cfg.batches;
        let hi = (b + 1) * cfg.n_traj / cfg.batches;
        let mut out = self.batch_out(hi - lo);
        let mut out_fine = self.fine.as_ref().map(|_| self.batch_out(hi - lo));
        let base = ChaCha8Rng::seed_from_u64(cfg.seed);
        let half = 0.5 * cfg.dt;
        for first in (lo..hi).step_by(LANES) {
            let live = (hi - first).min(LANES);
            // idle lanes of a short group run on streams no trajectory uses
            let mut rngs: [ChaCha8Rng; LANES] = std::array::from_fn(|l| {
                let mut r = base.clone();
                r.set_stream(if l < live { (first + l) as u64 } else { u64::MAX - l as u64 });
                r
            });
            let mut coarse = Lanes::<D>::new(&self.force);
            let mut refined = Lanes::<D>::new(&self.force);
            let mut done = 0;
            for (ti, &until) in self.record_steps.iter().enumerate() {
                for _ in done..until {
                    match self.fine.as_ref().filter(|_| REFINE) {
                        None => {
                            let (zx, zv) = draw::<D>(&mut rngs);
                            coarse.step(&self.flow, &self.force, half, &self.flow.noise(&zx, &zv));
                        }
                        Some(fine) => {
                            let (zx, zv) = draw::<D>(&mut rngs);
                            let n1 = fine.noise(&zx, &zv);
                            let (zx, zv) = draw::<D>(&mut rngs);
                            let n2 = fine.noise(&zx, &zv);
                            coarse.step(&self.flow, &self.force, half, &fine.compose(&n1, &n2));
                            refined.step(fine, &self.force, 0.5 * half, &n1);
                            refined.step(fine, &self.force, 0.5 * half, &n2);
                        }
                    }
                }
                done = until;
                coarse.record(&mut out, ti, live, cfg.keep_samples);
                if let Some(o) = out_fine.as_mut() {
                    refined.record(o, ti, live, cfg.keep_samples);
                }
            }
        }
        (out, out_fine)
    }
}

fn merge_outs(cfg: &LangevinConfig, dim: usize, dt: f64, times: &[f64], empty: &[(Histogram, Histogram2)], outs: Vec<BatchOut>) -> EnsembleStats {
    let mut moments = vec![Vec::with_capacity(cfg.batches); times.len()];
    let mut hist_x: Vec<Histogram> = empty.iter().map(|h| h.0.clone()).collect();
    let mut hist_xv: Vec<Histogram2> = empty.iter().map(|h| h.1.clone()).collect();
    let mut samples = if cfg.keep_samples { Some(vec![Vec::with_capacity(cfg.n_traj); times.len()]) } else { None };
    for o in outs {
        for t in 0..times.len() {
            moments[t].push(o.moments[t].clone());
            hist_x[t].merge(&o.hist_x[t]);
            hist_xv[t].merge(&o.hist_xv[t]);
            if let Some(s) = samples.as_mut() {
                s[t].extend_from_slice(&o.samples[t]);
            }
        }
    }
    EnsembleStats {
        dim,
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        dt,
        times: times.to_vec(),
        moments,
        hist_x,
        hist_xv,
        samples,
    }
}

fn run_ensemble(model: &Model, cfg: &LangevinConfig, refine: bool) -> Result<(EnsembleStats, Option<EnsembleStats>), LangevinError> {
    if !model.friction.is_constant() {
        return Err(LangevinError::NonConstantFriction);
    }
    let max = LangevinConfig::max_step(model);
    if !(cfg.dt > 0.0) || cfg.dt > max * (1.0 + 1e-12) {
        return Err(LangevinError::StepTooLarge { dt: cfg.dt, max });
    }
    if cfg.n_traj == 0 || cfg.batches == 0 || cfg.batches > cfg.n_traj {
        return Err(LangevinError::InvalidInput("need 1 <= batches <= n_traj".into()));
    }
    let n_records = (cfg.t_final / cfg.record_every + 1e-9).floor() as usize;
    if !(cfg.record_every >= cfg.dt) || n_records == 0 {
        return Err(LangevinError::InvalidInput("need dt <= record_every <= t_final".into()));
    }
    // each recorded time is the step grid point nearest to k * record_every
    let record_steps: Vec<usize> = (1..=n_records).map(|k| (k as f64 * cfg.record_every / cfg.dt).round() as usize).collect();
    let times: Vec<f64> = record_steps.iter().map(|&s| s as f64 * cfg.dt).collect();
    let d = model.dim();
    let a = model.friction.mean();
    let shared = Shared {
        cfg,
        force: Force::new(model),
        flow: OuFlow::new(&a, cfg.dt),
        fine: refine.then(|| OuFlow::new(&a, 0.5 * cfg.dt)),
        record_steps,
        empty: times.iter().map(|&t| histograms_at(t, &cfg.histogram)).collect(),
    };
    let run_batch = |b: usize| match (d, refine) {
        (1, false) => shared.run::<1, false>(b),
        (2, false) => shared.run::<2, false>(b),
        (_, false) => shared.run::<3, false>(b),
        (1, true) => shared.run::<1, true>(b),
        (2, true) => shared.run::<2, true>(b),
        (_, true) => shared.run::<3, true>(b),
    };
    let (outs, fine): (Vec<BatchOut>, Vec<Option<BatchOut>>) = (0..cfg.batches).into_par_iter().map(run_batch).unzip();
    let coarse = merge_outs(cfg, d, cfg.dt, &times, &shared.empty, outs);
    let fine = refine.then(|| merge_outs(cfg, d, 0.5 * cfg.dt, &times, &shared.empty, fine.into_iter().flatten().collect()));
    Ok((coarse, fine))
}

/// Simulates `n_traj` trajectories from `(0, 0)`.
pub fn integrate(model: &Model, cfg: &LangevinConfig) -> Result<EnsembleStats, LangevinError> {
    Ok(run_ensemble(model, cfg, false)?.0)
}

/// Runs the ensemble at step `dt` and at `dt / 2` driven by the same Brownian
/// paths: each coarse noise increment is the exact composition of the two
/// fine ones. Differences between the two outputs isolate the time
/// discretization error. The coarse output differs from [`integrate`] with
/// the same seed because each step consumes twice as many normals.
pub fn integrate_refined(model: &Model, cfg: &LangevinConfig) -> Result<(EnsembleStats, EnsembleStats), LangevinError> {
    let (coarse, fine) = run_ensemble(model, cfg, true)?;
    Ok((coarse, fine.expect("refined run requested")))
}

impl EnsembleStats {
    /// Index of the recorded time nearest to `t`, if within half a step.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let (i, best) = self
            .times
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, (s - t).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        (best <= 0.5 * self.dt + 1e-12).then_some(i)
    }

    fn nearest_index(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .expect("at least one recorded time")
    }

    /// Pooled sums at recorded time index `ti`.
    pub fn pooled(&self, ti: usize) -> Moments {
        let mut m = Moments::default();
        for b in &self.moments[ti] {
            m.merge(b);
        }
        m
    }

    fn groups(&self, tis: &[usize]) -> Vec<Vec<Moments>> {
        let nb = self.moments[0].len();
        (0..nb).map(|b| tis.iter().map(|&t| self.moments[t][b].clone()).collect()).collect()
    }

    /// `E[X_i X_j]` at time index `ti` with jackknife errors.
    pub fn msd(&self, ti: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.dim;
        let groups = self.groups(&[ti]);
        let mut est = DMatrix::zeros(d, d);
        let mut se = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let (e, s) = jackknife(&groups, |m| m[0].second_x(i, j));
                est[(i, j)] = e;
                se[(i, j)] = s;
            }
        }
        (est, se)
    }

    /// A scalar statistic of the pooled sums at the given time indices, with
    /// its jackknife error.
    pub fn statistic(&self, tis: &[usize], stat: impl FnMut(&[Moments]) -> f64) -> (f64, f64) {
        jackknife(&self.groups(tis), stat)
    }

    /// `(histogram of X_t, histogram of (X_t, V_t))` for the first coordinate.
    pub fn density_snapshot(&self, t: f64) -> Option<(&Histogram, &Histogram2)> {
        let i = self.time_index(t)?;
        Some((&self.hist_x[i], &self.hist_xv[i]))
    }

    /// Checks that the trace of the position covariance grows linearly over
    /// the last half of the run: slopes over `[T/2, 3T/4]` and `[3T/4, T]`
    /// agree within 5% plus three standard errors.
    pub fn linear_regime(&self) -> Result<(), LangevinError> {
        let t = *self.times.last().expect("nonempty");
        let idx = [self.nearest_index(0.5 * t), self.nearest_index(0.75 * t), self.times.len() - 1];
        if idx[0] == idx[1] || idx[1] == idx[2] {
            return Err(LangevinError::InvalidInput("too few recorded times for the linearity check".into()));
        }
        let (t0, t1, t2) = (self.times[idx[0]], self.times[idx[1]], self.times[idx[2]]);
        let d = self.dim;
        let tr = |m: &Moments| (0..d).map(|i| m.cov_x(i, i)).sum::<f64>();
        let (early, _) = self.statistic(&idx, |m| (tr(&m[1]) - tr(&m[0])) / (t1 - t0));
        let (late, _) = self.statistic(&idx, |m| (tr(&m[2]) - tr(&m[1])) / (t2 - t1));
        let (_, se) = self.statistic(&idx, |m| (tr(&m[2]) - tr(&m[1])) / (t2 - t1) - (tr(&m[1]) - tr(&m[0])) / (t1 - t0));
        let mean = 0.5 * (early + late);
        if (late - early).abs() <= 0.05 * mean.abs() + 3.0 * se {
            Ok(())
        } else {
            Err(LangevinError::NotInLinearRegime { early, late, se })
        }
    }
}

/// Einstein estimate of the effective diffusivity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusivityEstimate {
    pub estimate: DMatrix<f64>,
    pub se: DMatrix<f64>,
    /// Times whose covariance difference is used.
    pub window: (f64, f64),
}

/// `(Cov X_T - Cov X_{T/2}) / T`, i.e. the covariance growth over the last
/// half divided by twice its length, with jackknife errors. Fails with
/// [`LangevinError::NotInLinearRegime`] when the growth is not yet linear.
pub fn estimate_diffusivity(stats: &EnsembleStats) -> Result<DiffusivityEstimate, LangevinError> {
    stats.linear_regime()?;
    let last = stats.times.len() - 1;
    let t = stats.times[last];
    let mid = stats
        .time_index(0.5 * t)
        .ok_or_else(|| LangevinError::InvalidInput("T/2 is not a recorded time".into()))?;
    let span = t - stats.times[mid];
    let d = stats.dim;
    let mut estimate = DMatrix::zeros(d, d);
    let mut se = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let (e, s) = stats.statistic(&[mid, last], |m| (m[1].cov_x(i, j) - m[0].cov_x(i, j)) / (2.0 * span));
            estimate[(i, j)] = e;
            se[(i, j)] = s;
        }
    }
    Ok(DiffusivityEstimate {
        estimate,
        se,
        window: (stats.times[mid], t),
    })
}

/// Gaussian-envelope domination of the position histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashAronsonReport {
    /// Envelope variance is `rate * t`.
    pub rate: f64,
    /// `(t, max over well-populated bins of density / envelope)`.
    pub constants: Vec<(f64, f64)>,
}

impl NashAronsonReport {
    pub fn max_constant(&self) -> f64 {
        self.constants.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn spread(&self) -> f64 {
        let lo = self.constants.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        self.max_constant() / lo
    }
}

/// Fits the envelope rate as twice the largest `Var(X_t) / t` over `times`
/// and reports, per time, the largest ratio of the histogram density to the
/// centred Gaussian of variance `rate * t`. Bins with fewer than `min_count`
/// samples are skipped.
pub fn nash_aronson_check(stats: &EnsembleStats, times: &[f64], min_count: u64) -> Result<NashAronsonReport, LangevinError> {
    let idx: Vec<usize> = times
        .iter()
        .map(|&t| stats.time_index(t).ok_or_else(|| LangevinError::InvalidInput(format!("time {t} not recorded"))))
        .collect::<Result<_, _>>()?;
    let rate = 2.0
        * idx
            .iter()
            .map(|&i| stats.pooled(i).cov_x(0, 0) / stats.times[i])
            .fold(0.0, f64::max);
    let constants = idx
        .iter()
        .map(|&i| {
            let t = stats.times[i];
            let h = &stats.hist_x[i];
            let dens = h.density();
            let c = (0..h.bins())
                .filter(|&b| h.counts[b] >= min_count)
                .map(|b| dens[b] / normal_pdf(h.center(b), rate * t))
                .fold(0.0, f64::max);
            (t, c)
        })
        .collect();
    Ok(NashAronsonReport { rate, constants })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_sine_matches_std() {
        let mut worst: f64 = 0.0;
        for i in 0..=20000 {
            let f = -0.5 + i as f64 / 20000.0;
            worst = worst.max((sin_cycles(f) - (TAU * f).sin()).abs());
        }
        assert!(worst < 4e-16, "{worst}");
    }
}
