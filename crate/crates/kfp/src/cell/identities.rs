use super::{second_correctors, CellError, Centring, CorrectorOptions, CorrectorSet, SecondCorrectors};
use crate::multi_index;
use crate::spectral::{unit_grid, Model, PeriodicField, SolveOptions, MAX_DIM};

fn default_grid(cset: &CorrectorSet) -> usize {
    let n = 4 * cset.options().nx + 4;
    if cset.dim() == 3 {
        n.min(24)
    } else {
        n
    }
}

/// `sum_l (-d_l c_l + d_l H c_l)` at `x`, where `c_l` are the first-order
/// Hermite components of some phase field.
fn transport_average(cset: &CorrectorSet, comps: &[PeriodicField], x: &[f64; MAX_DIM]) -> f64 {
    let mut gh = [0.0; MAX_DIM];
    cset.model().potential.grad(x, &mut gh);
    comps
        .iter()
        .enumerate()
        .map(|(l, c)| {
            let (val, grad) = c.eval_grad(x);
            -grad[l] + gh[l] * val
        })
        .sum()
}

/// Sup over an x-grid of `|<-v.grad_x psi_ij + grad H.grad_v psi_ij>_gamma - (abar_ij(x) - c_ij)|`,
/// maximized over `(i, j)`, where `c_ij` is the centring of the second correctors.
/// `grid = None` picks a grid finer than the Fourier cut.
pub fn avg_psi_identity(cset: &CorrectorSet, psi: &SecondCorrectors, grid: Option<usize>) -> f64 {
    let d = cset.dim();
    let pts = unit_grid(d, grid.unwrap_or_else(|| default_grid(cset)));
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let f = psi.get(i, j);
            let comps: Vec<PeriodicField> = (0..d)
                .map(|l| PeriodicField::hermite_component(f, f.layout().herm_unit(l).expect("nv >= 1")))
                .collect();
            let local = cset.local_diffusivity(i, j);
            for x in &pts {
                let lhs = transport_average(cset, &comps, x);
                let rhs = match psi.centring {
                    Centring::Constant => local.eval(x) - cset.diffusivity()[(i, j)],
                    Centring::Local => 0.0,
                };
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// Sup over an x-grid of `|sum_i d_i abar_ij(x) - sum_i d_i H abar_ij(x)|`,
/// maximized over `j`; the pointwise form of `div(e^{-H} abar(x)) = 0`.
pub fn divergence_form_identity(cset: &CorrectorSet, grid: Option<usize>) -> f64 {
    let d = cset.dim();
    let pts = unit_grid(d, grid.unwrap_or_else(|| default_grid(cset)));
    let mut worst: f64 = 0.0;
    for j in 0..d {
        let comps: Vec<PeriodicField> = (0..d).map(|i| cset.local_diffusivity(i, j).clone()).collect();
        for x in &pts {
            worst = worst.max(transport_average(cset, &comps, x).abs());
        }
    }
    worst
}

/// Size of the hierarchy per level.
#[derive(Debug, Clone)]
pub struct GrowthReport {
    /// `max_{|alpha| = k} ||phi_alpha||` (coefficient norm), `k = 1..=order`.
    pub corrector_norms: Vec<f64>,
    /// `max_{|alpha| = k} |abar_alpha|`, `k = 1..=order`.
    pub tensor_sizes: Vec<f64>,
    /// `max_k (norm_k + tensor_k)^{1/k}`.
    pub constant: f64,
    /// Least-squares slope of `log norm_k` against `k`.
    pub slope: f64,
    pub r_squared: f64,
}

pub fn growth_report(cset: &CorrectorSet) -> GrowthReport {
    let d = cset.dim();
    let mut corrector_norms = Vec::new();
    let mut tensor_sizes = Vec::new();
    for k in 1..=cset.order() {
        let idx = multi_index::of_degree(d, k);
        corrector_norms.push(idx.iter().map(|a| cset.corrector(a).expect("built").norm_flat()).fold(0.0, f64::max));
        tensor_sizes.push(idx.iter().map(|a| cset.abar(a).abs()).fold(0.0, f64::max));
    }
    let constant = corrector_norms
        .iter()
        .zip(&tensor_sizes)
        .enumerate()
        .map(|(k, (n, t))| (n + t).powf(1.0 / (k + 1) as f64))
        .fold(0.0, f64::max);
    let (slope, r_squared) = log_linear_fit(&corrector_norms);
    GrowthReport {
        corrector_norms,
        tensor_sizes,
        constant,
        slope,
        r_squared,
    }
}

fn log_linear_fit(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.len() < 2 {
        return (0.0, 1.0);
    }
    let xs: Vec<f64> = (1..=values.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

#[derive(Debug, Clone)]
pub struct RefinementLevel {
    pub nx: usize,
    pub nv: usize,
    /// Row-major effective matrix.
    pub diffusivity: Vec<f64>,
    pub avg_psi_residual: f64,
    pub divergence_residual: f64,
    pub growth_constant: f64,
}

#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub levels: Vec<RefinementLevel>,
}

impl RefinementReport {
    fn strictly_decreasing(vals: impl Iterator<Item = f64>) -> bool {
        let v: Vec<f64> = vals.collect();
        v.windows(2).all(|w| w[1] < w[0])
    }

    pub fn avg_psi_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.levels.iter().map(|l| l.avg_psi_residual))
    }

    pub fn divergence_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.levels.iter().map(|l| l.divergence_residual))
    }

    /// Successive changes of the effective matrix (max entry).
    pub fn diffusivity_changes(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| {
                w[0].diffusivity
                    .iter()
                    .zip(&w[1].diffusivity)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Rebuilds correctors on each `(nx, nv)` cut and records the identities.
pub fn refinement_check(
    model: &Model,
    order: u32,
    cuts: &[(usize, usize)],
    solve: SolveOptions,
    grid: Option<usize>,
) -> Result<RefinementReport, CellError> {
    let mut levels = Vec::with_capacity(cuts.len());
    for &(nx, nv) in cuts {
        let mut opts = CorrectorOptions::new(order.max(1), nx, nv);
        opts.solve = solve;
        let cset = CorrectorSet::build(model, &opts)?;
        let psi = second_correctors(&cset, Centring::Constant)?;
        levels.push(RefinementLevel {
            nx,
            nv,
            diffusivity: cset.diffusivity().transpose().iter().copied().collect(),
            avg_psi_residual: avg_psi_identity(&cset, &psi, grid),
            divergence_residual: divergence_form_identity(&cset, grid),
            growth_constant: growth_report(&cset).constant,
        });
    }
    Ok(RefinementReport { levels })
}
