use thiserror::Error;

/// Errors raised by model construction, discretization, solvers and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlhError {
    #[error("invalid material profile: {0}")]
    InvalidProfile(String),

    #[error("invalid problem parameters: {0}")]
    InvalidProblem(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("material interface at z = {z} falls strictly inside a grid cell (h = {h})")]
    BreakpointOffGrid { z: f64, h: f64 },

    #[error("grid too coarse to carry a propagating discrete wave (h_tilde = {h_tilde}, L0 = {l0}, L1 = {l1})")]
    UnresolvedWave { h_tilde: f64, l0: f64, l1: f64 },

    #[error("non-finite field value at node {index}")]
    NonFiniteField { index: usize },

    #[error("field has {got} entries, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("singular Jacobian: pivot block {block} has determinant {det:e}")]
    SingularJacobian { block: usize, det: f64 },

    #[error("shooting root not found: {0}")]
    RootNotFound(String),

    #[error("shooting integration not self-consistent: substep refinement changed the field by {delta:e}")]
    StiffnessWarning { delta: f64 },

    #[error("ill-conditioned convergence fit: {0}")]
    IllConditionedFit(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, NlhError>;
