//! Numerical laboratory for the nonlocal equation `−Δu = g(|u ≥ u(x)|)` with
//! Dirichlet data: exact radial solutions, a grid solver for 1-D and 2-D
//! masked domains, and quantitative diagnostics of the dead core and its free
//! boundary.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod field;
pub mod linalg;
pub mod nonlinearity;
pub mod profile;
pub mod quad;
pub mod radial;
pub mod recursion;
pub mod solver;

pub use error::{Error, Result};
