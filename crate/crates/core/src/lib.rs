//! Two-dimensional Nernst-Planck-Euler simulator: ionic concentrations
//! drifting in a self-consistent potential and carried by an inviscid
//! incompressible flow, on a rectangle with Dirichlet data.

// `!(x <= tol)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod euler;
pub mod heat_kernel;
pub mod io;
pub mod mesh;
pub mod nernst_planck;
pub mod poisson;
pub mod verification;

pub use error::{NpeError, Result};
