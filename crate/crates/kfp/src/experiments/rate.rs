//! Convergence of the Monte Carlo position law to the homogenized Gaussian.

use serde::{Deserialize, Serialize};

use super::qbar::HistQbar;
use super::ExperimentError;
use crate::hetpoly::fit_loglog;
use crate::langevin::{estimate_diffusivity, integrate, normal_cdf, EnsembleStats, Histogram, HistogramSpec, LangevinConfig};
use crate::spectral::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomExperimentConfig {
    /// Comparison times.
    pub times: Vec<f64>,
    /// Data times of the homogenized solution; `0` means the point mass at
    /// the origin, i.e. the plain heat kernel.
    pub t0: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Spacing of recorded Monte Carlo times; every entry of `times` and
    /// `t0` must be a multiple.
    #[serde(default = "default_record")]
    pub record_every: f64,
    #[serde(default)]
    pub histogram: HistogramSpec,
}

fn default_batches() -> usize {
    50
}

fn default_record() -> f64 {
    1.0
}

impl HomExperimentConfig {
    pub fn standard(n_traj: usize, seed: u64) -> Self {
        HomExperimentConfig {
            times: vec![8.0, 16.0, 32.0, 64.0],
            t0: vec![0.0, 1.0, 2.0, 4.0],
            n_traj,
            seed,
            batches: default_batches(),
            record_every: default_record(),
            histogram: HistogramSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidInput(m.into()));
        if self.times.is_empty() || self.t0.is_empty() {
            return bad("times and t0 must be nonempty");
        }
        if self.n_traj == 0 || self.batches == 0 || !(self.record_every > 0.0) {
            return bad("budgets must be positive");
        }
        for &t in &self.times {
            for &s in &self.t0 {
                if !(s >= 0.0) || s > 0.5 * t {
                    return bad(&format!("need 0 <= t0 <= t / 2, got t0 = {s} for t = {t}"));
                }
            }
        }
        let on_grid = |t: f64| {
            let k = t / self.record_every;
            (k - k.round()).abs() < 1e-9
        };
        if !self.times.iter().chain(&self.t0).all(|&t| on_grid(t)) {
            return bad("times and t0 must be multiples of record_every");
        }
        Ok(())
    }

    pub fn langevin(&self, model: &Model) -> LangevinConfig {
        let t_final = self.times.iter().cloned().fold(0.0, f64::max);
        let mut cfg = LangevinConfig::for_model(model, t_final, self.n_traj, self.seed);
        cfg.batches = self.batches.min(self.n_traj);
        cfg.record_every = self.record_every;
        cfg.histogram = self.histogram;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub t: f64,
    pub t0: f64,
    /// Averaged L^2 distance of unit-cell position masses over `|z| <= sqrt t`.
    pub error_xmarginal: f64,
    /// The same on unit position cells times velocity bins, in `L^2_gamma`.
    pub error_phase: f64,
    /// Sampling standard error of the position-mass comparison.
    pub mc_se: f64,
    /// Log-log slope of the errors of this `t0` up to `t` (NaN for the first).
    pub slope_running: f64,
    /// `mc_se <= error_xmarginal / 2`.
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub abar: f64,
    /// Einstein estimate and standard error from the same ensemble.
    pub abar_mc: Option<(f64, f64)>,
    pub rows: Vec<RateRow>,
    /// Fit over the rows of the smallest `t0`.
    pub slope: f64,
    pub r_squared: f64,
    /// Errors of the smallest `t0` strictly decrease in `t`.
    pub decreasing: bool,
}

impl RateTable {
    pub const CSV_HEADER: [&'static str; 6] = ["t", "t0", "error_xmarginal", "error_phase", "mc_se", "slope_running"];

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| vec![r.t, r.t0, r.error_xmarginal, r.error_phase, r.mc_se, r.slope_running])
            .collect()
    }
}

/// Unit-cell masses `(z, mass)` with `|z| <= radius`, summed from the
/// lattice-aligned bins of `h`.
fn cell_masses(h: &Histogram, radius: f64) -> Vec<(f64, f64)> {
    let per = (1.0 / h.width()).round() as usize;
    let n = h.total() as f64;
    h.counts
        .chunks(per)
        .enumerate()
        .map(|(c, chunk)| (h.lo + 0.5 + c as f64, chunk.iter().sum::<u64>() as f64 / n))
        .filter(|(z, _)| z.abs() <= radius)
        .collect()
}

fn compare(stats: &EnsembleStats, q: &HistQbar, t: f64) -> (f64, f64, f64) {
    let ti = stats.time_index(t).expect("validated time");
    let h = &stats.hist_x[ti];
    let n = h.total() as f64;
    let radius = t.sqrt();
    let cells = cell_masses(h, radius);
    let mut e2 = 0.0;
    let mut s2 = 0.0;
    for &(z, m) in &cells {
        let target = q.cell_mass(t, z - 0.5, z + 0.5);
        e2 += (m - target).powi(2);
        s2 += m * (1.0 - m) / n;
    }
    let k = cells.len().max(1) as f64;

    // phase-space variant on unit x-cells times velocity bins
    let hv = &stats.hist_xv[ti];
    let (vlo, vhi, nv) = hv.v;
    let wv = (vhi - vlo) / nv as f64;
    let gamma: Vec<f64> = (0..nv)
        .map(|j| normal_cdf(vlo + (j + 1) as f64 * wv, 1.0) - normal_cdf(vlo + j as f64 * wv, 1.0))
        .collect();
    let ntot = hv.total() as f64;
    let mut p2 = 0.0;
    let mut kp = 0.0f64;
    for i in 0..hv.x.2 {
        let (z, _) = hv.centers(i, 0);
        if z.abs() > radius {
            continue;
        }
        let target = q.cell_mass(t, z - 0.5, z + 0.5);
        for (j, &g) in gamma.iter().enumerate() {
            if g < 1e-12 {
                continue;
            }
            let m = hv.counts[i * nv + j] as f64 / ntot;
            p2 += (m - target * g).powi(2) / g;
        }
        kp += 1.0;
    }
    ((e2 / k).sqrt(), (p2 / kp.max(1.0)).sqrt(), (s2 / k).sqrt())
}

/// Error table of an existing ensemble against homogenized solutions with
/// diffusivity `abar`.
pub fn rate_table(stats: &EnsembleStats, abar: f64, cfg: &HomExperimentConfig) -> Result<RateTable, ExperimentError> {
    cfg.validate()?;
    if stats.dim != 1 {
        return Err(ExperimentError::InvalidInput("the rate experiment is one-dimensional".into()));
    }
    let mut t0s = cfg.t0.clone();
    t0s.sort_by(f64::total_cmp);
    t0s.dedup();
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut rows = Vec::new();
    for &t0 in &t0s {
        let q = if t0 == 0.0 {
            HistQbar::point(abar, 0.0)
        } else {
            let ti = stats
                .time_index(t0)
                .ok_or_else(|| ExperimentError::InvalidInput(format!("t0 = {t0} not recorded")))?;
            HistQbar::from_histogram(&stats.hist_x[ti], abar, t0)
        };
        let mut ts = Vec::new();
        let mut es = Vec::new();
        for &t in &times {
            if stats.time_index(t).is_none() {
                return Err(ExperimentError::InvalidInput(format!("t = {t} not recorded")));
            }
            let (ex, ep, se) = compare(stats, &q, t);
            ts.push(t);
            es.push(ex);
            let slope_running = if ts.len() >= 2 { fit_loglog(&ts, &es).0 } else { f64::NAN };
            rows.push(RateRow {
                t,
                t0,
                error_xmarginal: ex,
                error_phase: ep,
                mc_se: se,
                slope_running,
                resolved: se <= 0.5 * ex,
            });
        }
    }
    let base: Vec<&RateRow> = rows.iter().filter(|r| r.t0 == t0s[0]).collect();
    if let Some(r) = base.iter().find(|r| !r.resolved) {
        return Err(ExperimentError::InsufficientBudget {
            t: r.t,
            t0: r.t0,
            error: r.error_xmarginal,
            noise: r.mc_se,
        });
    }
    let xs: Vec<f64> = base.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = base.iter().map(|r| r.error_xmarginal).collect();
    let (slope, r_squared) = if xs.len() >= 2 { fit_loglog(&xs, &ys) } else { (f64::NAN, f64::NAN) };
    let decreasing = ys.windows(2).all(|w| w[1] < w[0]);
    let abar_mc = estimate_diffusivity(stats).ok().map(|e| (e.estimate[(0, 0)], e.se[(0, 0)]));
    Ok(RateTable {
        abar,
        abar_mc,
        rows,
        slope,
        r_squared,
        decreasing,
    })
}

/// Runs the Monte Carlo ensemble of `cfg` and tabulates its distance to the
/// homogenized solutions.
pub fn homogenization_rate(model: &Model, abar: f64, cfg: &HomExperimentConfig) -> Result<RateTable, ExperimentError> {
    cfg.validate()?;
    if model.dim() != 1 {
        return Err(ExperimentError::InvalidInput("the rate experiment is one-dimensional".into()));
    }
    let stats = integrate(model, &cfg.langevin(model))?;
    rate_table(&stats, abar, cfg)
}
