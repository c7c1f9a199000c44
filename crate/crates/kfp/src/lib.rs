//! Periodic homogenization toolkit for the kinetic Fokker-Planck operator
//!
//! ```text
//! L f = -div_v(a grad_v f) + v.a grad_v f - v.grad_x f + grad H . grad_v f
//! ```
//!
//! on the torus in position and all of velocity space. The crate provides a
//! Fourier x Hermite Galerkin discretization, cell-problem correctors of every
//! order, exact multivariate polynomial algebra for the macroscopic operator,
//! heterogeneous polynomials, a Langevin Monte Carlo reference and the
//! experiment drivers that tie them together.

pub mod cell;
pub mod experiments;
pub mod hetpoly;
pub mod langevin;
pub mod multi_index;
pub mod persist;
pub mod poly;
pub mod quad;
pub mod spectral;

pub use cell::{CorrectorOptions, CorrectorSet};
pub use spectral::{Friction, Layout, Model, PhaseField, Potential};
