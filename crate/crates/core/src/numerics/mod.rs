//! Quadrature, finite differences and small dense eigensolvers.
//!
//! These routines serve as independent oracles for the closed forms in the
//! rest of the crate, and as the computational path where no closed form
//! exists (direct-imaging information, the grid density-matrix QFI).

mod diff;
pub mod linalg;
mod quadrature;

pub use diff::{central_diff, five_point_diff, DEFAULT_STEP_FRACTION};
pub use quadrature::{gauss_hermite_rule, integrate, integrate_2d, QuadratureSpec, Scheme};
