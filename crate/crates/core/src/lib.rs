//! Numerical toolkit for Machian derivations of the Bohmian quantum potential.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod ansatz;
pub mod error;
pub mod dynamics;
pub mod fieldgen;
pub mod grid;
pub mod potential;
pub mod variational;

pub use ansatz::{ExponentFamily, Variable};
pub use error::{Error, Result};
pub use fieldgen::{analytic_reference, make_field, AnalyticOp, FieldKind};
pub use grid::{Boundary, GridSpec, ScalarField, StencilOrder};
