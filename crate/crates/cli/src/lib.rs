//! Config-driven experiment runner for the kerr1d solvers.

pub mod commands;
pub mod config;
pub mod output;
