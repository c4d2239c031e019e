//! Newton's method with relaxation, the frozen-intensity fixed-point iteration,
//! continuation in the nonlinearity scale, increment probes and transmittance
//! sweeps.

use std::fmt;

use crate::error::{NlhError, Result};
use crate::linearization::{assemble_pair, from_real, to_real, Linearization};
use crate::model::DiscreteField;
use crate::schemes::{max_norm, Discretization};
use crate::C64;

/// Iteration controls shared by Newton and frozen iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Relaxation factor in `(0, 1]`.
    pub omega: f64,
    /// Target ratio of final to initial residual.
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Residual growth over the initial value that counts as divergence.
    pub divergence_factor: f64,
    /// Residuals below this multiple of the rounding level of the operator count
    /// as converged even when `tol_rel` is out of reach. `0` disables it.
    pub rounding_floor: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self::plain()
    }
}

impl NewtonConfig {
    pub fn plain() -> Self {
        Self { omega: 1.0, tol_rel: 1e-10, max_iter: 20, divergence_factor: 1e6, rounding_floor: 1.0 }
    }

    /// Relaxed Newton with the longer default cap.
    pub fn relaxed(omega: f64) -> Self {
        Self { omega, max_iter: 60, ..Self::plain() }
    }

    pub fn with_tol(self, tol_rel: f64) -> Self {
        Self { tol_rel, ..self }
    }

    pub fn with_max_iter(self, max_iter: usize) -> Self {
        Self { max_iter, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(NlhError::InvalidConfig(format!("omega must lie in (0, 1], got {}", self.omega)));
        }
        if !(self.tol_rel > 0.0) {
            return Err(NlhError::InvalidConfig(format!("tol_rel must be positive, got {}", self.tol_rel)));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(NlhError::InvalidConfig("divergence_factor must exceed 1".into()));
        }
        if !(self.rounding_floor >= 0.0) {
            return Err(NlhError::InvalidConfig("rounding_floor must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Diverged,
    SingularJacobian,
    IterationCap,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Diverged => "diverged",
            SolveStatus::SingularJacobian => "singular_jacobian",
            SolveStatus::IterationCap => "iteration_cap",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Last finite iterate.
    pub field: DiscreteField,
    /// Max-norm residual before the first and after every iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub r: C64,
    pub t: C64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn initial_residual(&self) -> f64 {
        self.residual_history[0]
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap()
    }

    /// Orders of magnitude between the initial and final residual.
    pub fn reduction_orders(&self) -> f64 {
        (self.initial_residual() / self.final_residual()).log10()
    }
}

/// Size of the residual that rounding alone produces for `field`.
pub fn rounding_level(disc: &Discretization, field: &[C64]) -> f64 {
    let h = disc.grid().h_tilde();
    let cells = disc.cells();
    let nu = cells.nu.iter().cloned().fold(1.0, f64::max);
    let eps = cells.eps.iter().cloned().fold(0.0, f64::max);
    let amp = field.iter().map(|v| v.norm()).fold(1.0, f64::max);
    f64::EPSILON * (4.0 / (h * h) + nu + eps * amp * amp) * amp
}

fn report(disc: &Discretization, field: Vec<C64>, history: Vec<f64>, status: SolveStatus) -> SolveReport {
    let (r, t) = disc.extract_rt(&field);
    SolveReport {
        iterations: history.len() - 1,
        field: DiscreteField::new(field).expect("iterates are kept finite"),
        residual_history: history,
        status,
        r,
        t,
    }
}

fn iterate(disc: &Discretization, initial: &DiscreteField, cfg: &NewtonConfig, kind: Linearization) -> Result<SolveReport> {
    cfg.validate()?;
    let mut field = initial.values().to_vec();
    let mut residual = disc.residual(&field)?;
    let r0 = max_norm(&residual);
    let mut history = vec![r0];
    let floor = |f: &[C64]| cfg.rounding_floor * rounding_level(disc, f);
    if r0 <= floor(&field) || r0 == 0.0 {
        return Ok(report(disc, field, history, SolveStatus::Converged));
    }
    for _ in 0..cfg.max_iter {
        let jac = assemble_pair(disc, &field, kind)?.to_real();
        let step = match jac.solve(&to_real(&residual)) {
            Ok(s) => from_real(&s),
            Err(NlhError::SingularJacobian { .. }) => {
                return Ok(report(disc, field, history, SolveStatus::SingularJacobian));
            }
            Err(e) => return Err(e),
        };
        let next: Vec<C64> = field.iter().zip(&step).map(|(e, d)| e - d * cfg.omega).collect();
        let next_residual = match disc.residual(&next) {
            Ok(r) => r,
            Err(NlhError::NonFiniteField { .. }) => {
                history.push(f64::INFINITY);
                return Ok(report(disc, field, history, SolveStatus::Diverged));
            }
            Err(e) => return Err(e),
        };
        let r = max_norm(&next_residual);
        field = next;
        residual = next_residual;
        history.push(r);
        if !r.is_finite() || r > cfg.divergence_factor * r0 {
            return Ok(report(disc, field, history, SolveStatus::Diverged));
        }
        if r <= cfg.tol_rel * r0 || r <= floor(&field) {
            return Ok(report(disc, field, history, SolveStatus::Converged));
        }
    }
    Ok(report(disc, field, history, SolveStatus::IterationCap))
}

/// Relaxed Newton: `E <- E - omega J^-1 F(E)`.
pub fn newton_solve(disc: &Discretization, initial: &DiscreteField, cfg: &NewtonConfig) -> Result<SolveReport> {
    iterate(disc, initial, cfg, Linearization::Newton)
}

/// Frozen-intensity iteration: solve the linear problem with `|E|^2` taken from
/// the current iterate, then blend `E <- (1 - omega) E + omega E_new`.
pub fn frozen_solve(disc: &Discretization, initial: &DiscreteField, cfg: &NewtonConfig) -> Result<SolveReport> {
    iterate(disc, initial, cfg, Linearization::Frozen)
}

/// Solution of the problem with every `eps` set to zero.
pub fn linear_solution(disc: &Discretization) -> Result<DiscreteField> {
    let lin = disc.with_eps_scaled(0.0);
    let zero = DiscreteField::zeros(disc.m_count());
    let rep = newton_solve(&lin, &zero, &NewtonConfig::plain().with_max_iter(2))?;
    match rep.status {
        SolveStatus::Converged => Ok(rep.field),
        SolveStatus::SingularJacobian => Err(NlhError::SingularJacobian { block: 0, det: 0.0 }),
        _ => Err(NlhError::InvalidProblem("linear solve did not converge".into())),
    }
}

/// Increasing multipliers applied to the material `eps` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPlan {
    pub eps_targets: Vec<f64>,
    pub per_step_config: NewtonConfig,
}

impl ContinuationPlan {
    pub fn new(eps_targets: Vec<f64>, per_step_config: NewtonConfig) -> Result<Self> {
        if eps_targets.is_empty() {
            return Err(NlhError::InvalidConfig("continuation plan has no targets".into()));
        }
        if eps_targets.iter().any(|e| !(e.is_finite() && *e > 0.0)) || eps_targets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NlhError::InvalidConfig("continuation targets must be positive and strictly increasing".into()));
        }
        per_step_config.validate()?;
        Ok(Self { eps_targets, per_step_config })
    }

    /// `steps` equal increments from `step` up to `end`.
    pub fn uniform(end: f64, steps: usize, per_step_config: NewtonConfig) -> Result<Self> {
        let targets = (1..=steps).map(|k| end * k as f64 / steps as f64).collect();
        Self::new(targets, per_step_config)
    }
}

/// A continuation step that did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFailed {
    /// Multiplier at which the step failed.
    pub eps_factor: f64,
    /// Reports of the converged steps before it.
    pub completed: Vec<SolveReport>,
    pub failed: SolveReport,
}

impl StepFailed {
    pub fn last_good(&self) -> Option<&SolveReport> {
        self.completed.last()
    }
}

impl fmt::Display for StepFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "continuation step at eps factor {} ended with status {} after {} converged steps",
            self.eps_factor,
            self.failed.status,
            self.completed.len()
        )
    }
}

impl std::error::Error for StepFailed {}

/// Solves along `plan`, seeding every step with the previous converged field.
/// `base` is the operator at multiplier 1.
pub fn continuation_solve(
    base: &Discretization,
    plan: &ContinuationPlan,
    initial: &DiscreteField,
) -> Result<std::result::Result<Vec<SolveReport>, StepFailed>> {
    let mut seed = initial.clone();
    let mut reports: Vec<SolveReport> = Vec::with_capacity(plan.eps_targets.len());
    for &factor in &plan.eps_targets {
        let rep = newton_solve(&base.with_eps_scaled(factor), &seed, &plan.per_step_config)?;
        if !rep.converged() {
            return Ok(Err(StepFailed { eps_factor: factor, completed: reports, failed: rep }));
        }
        seed = rep.field.clone();
        reports.push(rep);
    }
    Ok(Ok(reports))
}

/// Step control for [`adaptive_continuation`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveContinuation {
    pub target: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Step multiplier after a converged step.
    pub growth: f64,
    pub primary: NewtonConfig,
    /// Tried in order at the same target when the primary solve fails.
    pub fallbacks: Vec<NewtonConfig>,
    /// Increments tried from the last converged state once halving reaches
    /// `min_step`, to jump past the end of a branch.
    pub hops: Vec<f64>,
}

impl AdaptiveContinuation {
    /// Plain Newton capped at 8 iterations, with relaxed fallbacks of
    /// decreasing `omega`.
    pub fn new(target: f64) -> Self {
        Self {
            target,
            initial_step: 0.05,
            min_step: 2e-3,
            max_step: 0.25,
            growth: 1.5,
            primary: NewtonConfig::plain().with_max_iter(8),
            fallbacks: vec![
                NewtonConfig::relaxed(0.3).with_max_iter(200),
                NewtonConfig::relaxed(0.1).with_max_iter(800),
                NewtonConfig::relaxed(0.05).with_max_iter(1500),
            ],
            hops: vec![0.005, 0.01, 0.02, 0.04, 0.08],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.target.is_finite()
            && self.target > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.growth >= 1.0
            && self.hops.iter().all(|d| d.is_finite() && *d > 0.0);
        if !ok {
            return Err(NlhError::InvalidConfig("adaptive continuation needs 0 < min <= initial <= max step, growth >= 1".into()));
        }
        self.primary.validate()?;
        self.fallbacks.iter().try_for_each(NewtonConfig::validate)
    }
}

/// One accepted step of [`adaptive_continuation`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStep {
    pub eps_factor: f64,
    /// 0 for the primary config, `k` for the `k`-th fallback.
    pub config_index: usize,
    pub report: SolveReport,
}

fn first_converged(disc: &Discretization, seed: &DiscreteField, configs: &[&NewtonConfig]) -> Result<std::result::Result<(usize, SolveReport), SolveReport>> {
    let mut last = None;
    for (k, cfg) in configs.iter().enumerate() {
        let rep = newton_solve(disc, seed, cfg)?;
        if rep.converged() {
            return Ok(Ok((k, rep)));
        }
        last = Some(rep);
    }
    Ok(Err(last.expect("at least one config")))
}

/// Continues from multiplier `eps_start` to `ctl.target`. A failed step is
/// retried with the fallbacks and then with half the increment; a converged
/// step grows the next increment. Once the increment falls below
/// `ctl.min_step` the hop increments are tried, and the run fails if none
/// converges.
pub fn adaptive_continuation(
    base: &Discretization,
    eps_start: f64,
    initial: &DiscreteField,
    ctl: &AdaptiveContinuation,
) -> Result<std::result::Result<Vec<ContinuationStep>, StepFailed>> {
    ctl.validate()?;
    let configs: Vec<&NewtonConfig> = std::iter::once(&ctl.primary).chain(&ctl.fallbacks).collect();
    let mut seed = initial.clone();
    let mut eps = eps_start;
    let mut step = ctl.initial_step;
    let mut steps: Vec<ContinuationStep> = Vec::new();
    while eps < ctl.target {
        let next = (eps + step).min(ctl.target);
        let mut outcome = first_converged(&base.with_eps_scaled(next), &seed, &configs)?.map(|a| (next, a));
        if outcome.is_err() && step * 0.5 < ctl.min_step {
            for &d in &ctl.hops {
                let hop = (eps + d).min(ctl.target);
                outcome = first_converged(&base.with_eps_scaled(hop), &seed, &configs)?.map(|a| (hop, a));
                if outcome.is_ok() || hop == ctl.target {
                    break;
                }
            }
            if let Err(failed) = outcome {
                let completed = steps.into_iter().map(|s| s.report).collect();
                return Ok(Err(StepFailed { eps_factor: next, completed, failed }));
            }
            step = ctl.min_step;
        }
        match outcome {
            Ok((at, (config_index, report))) => {
                eps = at;
                seed = report.field.clone();
                steps.push(ContinuationStep { eps_factor: at, config_index, report });
                step = (step * ctl.growth).min(ctl.max_step);
            }
            Err(_) => step *= 0.5,
        }
    }
    Ok(Ok(steps))
}

/// Status of one continuation step of size `d` from a converged state at
/// multiplier `eps_start`, for every `d` in `increments`.
pub fn increment_probe(
    base: &Discretization,
    eps_start: f64,
    start: &DiscreteField,
    increments: &[f64],
    cfg: &NewtonConfig,
) -> Result<Vec<(f64, SolveReport)>> {
    increments
        .iter()
        .map(|&d| Ok((d, newton_solve(&base.with_eps_scaled(eps_start + d), start, cfg)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    /// Each point is seeded from the next smaller multiplier.
    FromBelow,
    /// Each point is seeded from the next larger multiplier.
    FromAbove,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub eps_factor: f64,
    pub transmittance: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub report: SolveReport,
}

/// Controls for [`transmittance_sweep`]. A point whose plain solve fails is
/// retried with each fallback config in turn from the same seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub primary: NewtonConfig,
    pub fallbacks: Vec<NewtonConfig>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            primary: NewtonConfig::plain(),
            fallbacks: vec![NewtonConfig::relaxed(0.3), NewtonConfig::relaxed(0.1).with_max_iter(400)],
        }
    }
}

/// Transmittance along `eps_grid` (multipliers, monotone in the sweep
/// direction), continuing from `seed` at the first point. Failed points are
/// recorded and the sweep continues from the last converged field.
pub fn transmittance_sweep(
    base: &Discretization,
    eps_grid: &[f64],
    direction: SweepDirection,
    seed: &DiscreteField,
    cfg: &SweepConfig,
) -> Result<Vec<SweepPoint>> {
    let monotone = match direction {
        SweepDirection::FromBelow => eps_grid.windows(2).all(|w| w[1] > w[0]),
        SweepDirection::FromAbove => eps_grid.windows(2).all(|w| w[1] < w[0]),
    };
    if !monotone {
        return Err(NlhError::InvalidConfig("sweep grid is not monotone in the sweep direction".into()));
    }
    let mut seed = seed.clone();
    let mut out = Vec::with_capacity(eps_grid.len());
    for &factor in eps_grid {
        let disc = base.with_eps_scaled(factor);
        let mut rep = newton_solve(&disc, &seed, &cfg.primary)?;
        let mut iterations = rep.iterations;
        for fb in &cfg.fallbacks {
            if rep.converged() {
                break;
            }
            rep = newton_solve(&disc, &seed, fb)?;
            iterations += rep.iterations;
        }
        if rep.converged() {
            seed = rep.field.clone();
        }
        out.push(SweepPoint {
            eps_factor: factor,
            transmittance: rep.transmittance(),
            status: rep.status,
            iterations,
            report: rep,
        });
    }
    Ok(out)
}
