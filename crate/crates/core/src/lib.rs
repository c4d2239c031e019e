//! Solvers for the one-dimensional nonlinear (Kerr) Helmholtz equation
//!
//! ```text
//!     E'' + k0^2 (nu(z) + eps(z) |E|^2) E = 0,   0 < z < z_max,
//! ```
//!
//! with piecewise-constant `nu`, `eps`, driven by a unit incoming plane wave
//! from the left and radiating on both sides.
//!
//! The crate provides
//!
//! * compact finite-volume discretizations of order two ([`SchemeKind::Fv2`],
//!   [`SchemeKind::Fv2Alt`]) and four ([`SchemeKind::Fv4`]), plus the standard
//!   central-difference reference schemes ([`SchemeKind::Fd2`], [`SchemeKind::Fd5`]);
//! * discrete two-way radiation boundary conditions built from the exact
//!   characteristic roots of the exterior difference equation;
//! * a Newton solver on the real `2M` lift of the complex system, with
//!   block-banded Jacobians, relaxation, continuation in the nonlinearity and
//!   the frozen-nonlinearity reference iteration;
//! * independent oracles: a high-order shooting integrator, closed-form and
//!   discrete step-medium solutions, a transfer-matrix solver and convergence fits.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod linearization;
pub mod model;
pub mod oracles;
pub mod schemes;
pub mod solvers;

pub use error::{NlhError, Result};
pub use model::{build_grid, sample_cells, CellMaterial, DiscreteField, Grid, MaterialProfile, ProblemSpec};
pub use schemes::{Discretization, SchemeKind};
pub use solvers::{NewtonConfig, SolveReport, SolveStatus};

/// Complex field values.
pub type C64 = num_complex::Complex64;
