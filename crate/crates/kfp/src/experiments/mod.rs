//! End-to-end checks of homogenization: the two-scale residual identity and
//! the decay of the Monte Carlo distance to the homogenized Gaussian.

mod qbar;
mod rate;
mod residual;

use thiserror::Error;

pub use qbar::{qbar_derivative_bounds, Atom, DerivativeBounds, GaussianQbar, HistQbar};
pub use rate::{homogenization_rate, rate_table, HomExperimentConfig, RateRow, RateTable};
pub use residual::{two_scale_residual, ResidualGrid, TwoScaleReport};

use crate::langevin::Histogram;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("histogram noise {noise:.3e} exceeds half the measured error {error:.3e} at t = {t}, t0 = {t0}")]
    InsufficientBudget { t: f64, t0: f64, error: f64, noise: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Cell(#[from] crate::cell::CellError),
    #[error(transparent)]
    Langevin(#[from] crate::langevin::LangevinError),
}

/// Homogenized solution started at `t0` from a Monte Carlo position histogram.
pub fn build_qbar(hist: &Histogram, abar: f64, t0: f64) -> HistQbar {
    HistQbar::from_histogram(hist, abar, t0)
}
