//! Reference solutions and error analytics, independent of the discrete schemes.

pub mod convergence;
pub mod linear;
pub mod shooting;

pub use convergence::{fit_convergence, linf_error, ConvergenceFit, FitModel};
pub use linear::{
    linear_step_closed_form, linear_step_discrete_solution, transfer_matrix_solution, DiscreteStepSolution,
    LinearStepSolution,
};
pub use shooting::{
    incoming_for_transmitted, shooting_reference, shooting_solve, transmittance_curve, ShootingConfig, ShootingSolution,
};
