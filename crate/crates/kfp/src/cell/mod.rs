//! Corrector hierarchy, second-order correctors and effective tensors.
//!
//! The correctors solve, level by level in `|alpha|`,
//!
//! ```text
//! L phi_alpha = sum_j v_j phi_{alpha - e_j} - <v_j phi_{alpha - e_j}>_m,   phi_0 = 1,
//! ```
//!
//! with `<phi_alpha>_m = 0`. The subtracted means are the effective tensors
//! `abar_alpha = sum_j <v_j phi_{alpha - e_j}>_m`, signed so that the
//! second-order part is positive definite, and
//! `sum_alpha L(phi_alpha d^alpha q) = -sum_alpha abar_alpha d^alpha q`.

mod identities;
mod second;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::multi_index;
use crate::poly::MacroTensors;
use crate::spectral::{CellSolver, FourierTable, Layout, Model, PeriodicField, PhaseField, SolveOptions, SolveReport, SpectralError};

pub use identities::{
    avg_psi_identity, divergence_form_identity, growth_report, refinement_check, GrowthReport, RefinementLevel, RefinementReport,
};
pub use second::{second_correctors, Centring, SecondCorrectors};

#[derive(Debug, Error)]
pub enum CellError {
    #[error("corrector order must be at least 1, got {0}")]
    InvalidOrder(u32),
    #[error("solve for index {alpha:?} did not converge (last residual {last:.3e})")]
    NoConvergence { alpha: Vec<u32>, last: f64, residual_history: Vec<f64> },
    #[error("right-hand side for index {alpha:?} has Gibbs mean {mean:.3e} above {tol:.3e}")]
    RhsIncompatible { alpha: Vec<u32>, mean: f64, tol: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl CellError {
    fn at(alpha: &[u32], e: SpectralError) -> Self {
        match e {
            SpectralError::NoConvergence { residual_history } => CellError::NoConvergence {
                alpha: alpha.to_vec(),
                last: residual_history.last().copied().unwrap_or(f64::NAN),
                residual_history,
            },
            SpectralError::IncompatibleRhs { mean, tol } => CellError::RhsIncompatible { alpha: alpha.to_vec(), mean, tol },
            other => CellError::Spectral(other),
        }
    }
}

/// Cuts and tolerances for the hierarchy. Level `k` uses the Hermite cut
/// `nv + k - 1` so that multiplication by `v` never truncates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorOptions {
    pub order: u32,
    pub nx: usize,
    pub nv: usize,
    pub solve: SolveOptions,
}

impl CorrectorOptions {
    pub fn new(order: u32, nx: usize, nv: usize) -> Self {
        CorrectorOptions {
            order,
            nx,
            nv,
            solve: SolveOptions::default(),
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.solve.tol = tol;
        self
    }

    pub fn layout(&self, dim: usize, level: u32) -> Layout {
        Layout::new(dim, self.nx, self.nv + level.max(1) as usize - 1)
    }
}

/// Correctors `phi_alpha` for `1 <= |alpha| <= order` and the derived
/// effective quantities.
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    model: Model,
    opts: CorrectorOptions,
    correctors: BTreeMap<Vec<u32>, PhaseField>,
    reports: BTreeMap<Vec<u32>, SolveReport>,
    tensors: MacroTensors<f64>,
    local: Vec<PeriodicField>,
    matrix: DMatrix<f64>,
    weight: FourierTable,
}

/// `sum_j v_j phi_{alpha - e_j}` on `layout`.
fn source(
    alpha: &[u32],
    correctors: &BTreeMap<Vec<u32>, PhaseField>,
    layout: &Arc<Layout>,
) -> PhaseField {
    let mut rhs = PhaseField::zeros(layout.clone());
    for j in 0..alpha.len() {
        let Some(lower) = multi_index::lower(alpha, j) else {
            continue;
        };
        let prev = if multi_index::degree(&lower) == 0 {
            PhaseField::constant(layout.clone(), 1.0)
        } else {
            correctors[&lower].clone()
        };
        rhs.axpy(1.0, &prev.mul_v_into(j, layout.clone()));
    }
    rhs
}

impl CorrectorSet {
    /// Solves the hierarchy level by level; indices within a level are
    /// solved in parallel.
    pub fn build(model: &Model, opts: &CorrectorOptions) -> Result<Self, CellError> {
        if opts.order < 1 {
            return Err(CellError::InvalidOrder(opts.order));
        }
        let d = model.dim();
        let mut correctors = BTreeMap::new();
        let mut reports = BTreeMap::new();
        for level in 1..=opts.order {
            let layout = Arc::new(opts.layout(d, level));
            let solver = CellSolver::new(model, layout.clone(), opts.solve)?;
            let solved: Vec<_> = multi_index::of_degree(d, level)
                .into_par_iter()
                .map(|alpha| {
                    let mut rhs = source(&alpha, &correctors, &layout);
                    let mean = solver.mean_m(&rhs);
                    rhs.coeffs_mut()[layout.flat(layout.zero_mode(), 0)] -= mean;
                    solver
                        .solve_mean_zero(&rhs)
                        .map(|(phi, rep)| (alpha.clone(), phi, rep))
                        .map_err(|e| CellError::at(&alpha, e))
                })
                .collect();
            for r in solved {
                let (alpha, phi, rep) = r?;
                correctors.insert(alpha.clone(), phi);
                reports.insert(alpha, rep);
            }
        }
        let mut set = Self::from_correctors(model, opts, correctors)?;
        set.reports = reports;
        Ok(set)
    }

    /// Rebuilds the effective quantities from stored correctors.
    pub fn from_correctors(
        model: &Model,
        opts: &CorrectorOptions,
        correctors: BTreeMap<Vec<u32>, PhaseField>,
    ) -> Result<Self, CellError> {
        if opts.order < 1 {
            return Err(CellError::InvalidOrder(opts.order));
        }
        let d = model.dim();
        for level in 1..=opts.order {
            for alpha in multi_index::of_degree(d, level) {
                if !correctors.contains_key(&alpha) {
                    return Err(CellError::Spectral(SpectralError::InvalidInput(format!("missing corrector {alpha:?}"))));
                }
            }
        }
        let weight = model.weight_table(2 * opts.nx);
        let mut tensors = MacroTensors::zero(d, opts.order + 1);
        for level in 2..=opts.order + 1 {
            let layout = Arc::new(opts.layout(d, level));
            for alpha in multi_index::of_degree(d, level) {
                let rhs = source(&alpha, &correctors, &layout);
                tensors.set(alpha, crate::spectral::mean_m(&weight, &rhs));
            }
        }
        let mut local = Vec::with_capacity(d * d);
        let mut matrix = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let phi = &correctors[&multi_index::unit(d, j)];
                let h = phi.layout().herm_unit(i).expect("nv >= 1");
                let f = PeriodicField::hermite_component(phi, h);
                matrix[(i, j)] = f.weighted_mean(&weight);
                local.push(f);
            }
        }
        Ok(CorrectorSet {
            model: model.clone(),
            opts: *opts,
            correctors,
            reports: BTreeMap::new(),
            tensors,
            local,
            matrix,
            weight,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn options(&self) -> &CorrectorOptions {
        &self.opts
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn order(&self) -> u32 {
        self.opts.order
    }

    /// `phi_alpha` for `1 <= |alpha| <= order`.
    pub fn corrector(&self, alpha: &[u32]) -> Option<&PhaseField> {
        self.correctors.get(alpha)
    }

    pub fn correctors(&self) -> &BTreeMap<Vec<u32>, PhaseField> {
        &self.correctors
    }

    /// `phi_alpha` including `phi_0 = 1`, on its own level's layout.
    pub fn corrector_or_one(&self, alpha: &[u32]) -> Option<PhaseField> {
        if multi_index::degree(alpha) == 0 {
            let l = Arc::new(self.opts.layout(self.dim(), 1));
            return Some(PhaseField::constant(l, 1.0));
        }
        self.correctors.get(alpha).cloned()
    }

    pub fn reports(&self) -> &BTreeMap<Vec<u32>, SolveReport> {
        &self.reports
    }

    /// `abar_alpha` for `2 <= |alpha| <= order + 1`.
    pub fn tensors(&self) -> &MacroTensors<f64> {
        &self.tensors
    }

    pub fn abar(&self, alpha: &[u32]) -> f64 {
        self.tensors.get(alpha)
    }

    /// `abar_ij(x) = <v_i phi_j>_gamma`.
    pub fn local_diffusivity(&self, i: usize, j: usize) -> &PeriodicField {
        &self.local[i * self.dim() + j]
    }

    /// `abar_ij = <v_i phi_j>_m`.
    pub fn diffusivity(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Fourier table of the normalized Gibbs density in x.
    pub fn weight(&self) -> &FourierTable {
        &self.weight
    }

    pub fn gibbs_mean(&self, f: &PhaseField) -> f64 {
        crate::spectral::mean_m(&self.weight, f)
    }
}
