//! Fourier x Hermite Galerkin discretization of the kinetic Fokker-Planck
//! operator on the torus times velocity space.

mod field;
mod gmres;
mod layout;
mod model;
mod operator;
mod periodic;
mod solve;

pub use field::{hermite_values, PhaseField};
pub use gmres::{gmres, GmresConfig, GmresOutcome};
pub use layout::{Layout, MAX_DIM};
pub use model::{sample_fourier, CosineTerm, FourierTable, Friction, FrictionTerm, Model, Potential};
pub use operator::{check_cuts, KfpOperator, Ladder, LocalOperator};
pub use periodic::{unit_grid, PeriodicField};
pub use solve::{inner_product_m, mean_m, CellSolver, SolveOptions, SolveReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("cuts too small: nx = {nx}, nv = {nv}; the coefficients need nx >= {need_nx} and nv >= 1")]
    CutsTooSmall { nx: usize, nv: usize, need_nx: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("right-hand side has Gibbs mean {mean:.3e}, tolerance {tol:.3e}")]
    IncompatibleRhs { mean: f64, tol: f64 },
    #[error("Krylov solve did not converge; last relative residual {:.3e} after {} steps", residual_history.last().copied().unwrap_or(f64::NAN), residual_history.len())]
    NoConvergence { residual_history: Vec<f64> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
