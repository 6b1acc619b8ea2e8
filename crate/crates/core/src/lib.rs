//! Reduced Ginzburg-Landau energies near the upper critical field.
//!
//! The crate discretizes the magnetic Schrödinger operator with link phases,
//! minimizes the reduced functionals on Dirichlet squares and cubes, computes
//! the lowest Landau level of the magnetic-periodic torus, and minimizes the
//! Abrikosov energy over it.

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod minimize;
pub mod spectral;
pub mod abrikosov;
pub mod gl3d;
pub mod verify;

pub use error::{Error, Result};
pub use field::{ComplexField, EnergyBreakdown, GaugeLinks, Grid};

pub type C64 = num_complex::Complex64;
