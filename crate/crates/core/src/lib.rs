//! Numerical laboratory for Ricci-flow singularity formation in the
//! rotationally symmetric (warped-product) reduction.
//!
//! Everything lives on a 1-D radial/axial grid.  A metric perturbation is a
//! symmetric 2-tensor `h = a·dr² + b·ψ² g_link`; the library builds model
//! shrinking-soliton backgrounds, the weighted Lichnerowicz operator
//! `Δ_f + 2Rm` acting on (a, b), the rescaled perturbation flow with its
//! quadratic nonlinearity and a synthetic grafting forcing, barrier
//! (supersolution) defect checks, and the shooting search over unstable-mode
//! coefficients.

pub mod barriers;
pub mod config;
pub mod emit;
pub mod error;
pub mod fd;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod lapack;
pub mod operator;
pub mod shooting;
pub mod tensor;

pub use error::{Error, Result};
