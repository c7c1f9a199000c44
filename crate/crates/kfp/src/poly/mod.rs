//! Exact multivariate polynomial algebra: the scaled coefficient inner
//! product, harmonic decomposition, the constant-coefficient macroscopic
//! operator and its inverse, Hermite and Newton bases, lattice differences.

mod estimates;
mod harmonic;
mod hermite;
mod lattice;
mod macro_op;
mod multipoly;
mod newton;
mod scalar;
mod selftest;

pub use estimates::{
    derivative_difference_ratio, gradient_bound_ratio, heat_expectation, heat_tail, linf_l2_constant, markov_constant,
    poly_estimate_suite, tail_bound_ratio, EstimateCheck, EstimateConfig, EstimateReport,
};
pub use harmonic::{harmonic_decompose, harmonic_decompose_in, pr_inner, pr_norm, s_apply, s_apply_graded, s_apply_in, Metric};
pub use hermite::{gaussian_expectation, gaussian_moment, hermite_checks, hermite_direct, hermite_norm_sq, hermite_poly, HermiteReport};
pub use lattice::LatticeField;
pub use macro_op::{MacroInverse, MacroTensors};
pub use multipoly::{FloatPoly, MultiPoly, RatPoly};
pub use newton::{from_newton, newton_1d, newton_checks, newton_coefficients, newton_poly, random_poly, NewtonReport};
pub use selftest::{identity_suite, SelfTestConfig, SelfTestReport, SuiteCheck};
pub use scalar::{factorial, invert, pow, rat, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("macroscopic tensors known to order {available}, need {needed}")]
    InsufficientOrder { needed: u32, available: u32 },
    #[error("second-order part is degenerate: {0}")]
    DegenerateSecondOrder(String),
    #[error("lattice box too small for a difference in direction {direction}")]
    DomainTooSmall { direction: usize },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// `macro_apply` under its conventional name.
pub fn macro_apply<T: Scalar>(tensors: &MacroTensors<T>, q: &MultiPoly<T>) -> Result<MultiPoly<T>, PolyError> {
    tensors.apply(q)
}

/// `macro_invert` under its conventional name.
pub fn macro_invert<T: Scalar>(tensors: &MacroTensors<T>, p: &MultiPoly<T>, r: f64) -> Result<MacroInverse<T>, PolyError> {
    tensors.invert(p, r)
}

/// `D^alpha g` on a lattice field.
pub fn finite_difference(g: &LatticeField, alpha: &[u32]) -> Result<LatticeField, PolyError> {
    g.finite_difference(alpha)
}
