//! Subcommand drivers. Each writes its tables under the output directory and
//! reports whether every row converged.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use kerr1d::coefficients::coefficient_table;
use kerr1d::oracles::{
    fit_convergence, linear_step_discrete_solution, linf_error, shooting_solve, transfer_matrix_solution, FitModel,
    LinearStepSolution, ShootingConfig, ShootingSolution,
};
use kerr1d::solvers::*;
use kerr1d::{DiscreteField, Discretization, Grid, ProblemSpec, C64};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Direction, ExperimentConfig, SeedPolicy};
use crate::output::{num, read_field, write_csv, write_json};

/// What a run leaves behind for the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub all_converged: bool,
    pub rows: usize,
}

struct Context1 {
    cfg: ExperimentConfig,
    spec: ProblemSpec,
    hash: String,
    scheme: kerr1d::SchemeKind,
}

impl Context1 {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self { spec: cfg.problem()?, hash: cfg.hash(), scheme: cfg.scheme_kind()?, cfg: cfg.clone() })
    }

    fn csv(&self, out: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        write_csv(&out.join(name), &self.hash, self.scheme.name(), header, rows)
    }

    fn single_grid(&self) -> Result<Grid> {
        let grids = self.cfg.grids(&self.spec)?;
        if grids.len() != 1 {
            bail!("this subcommand needs exactly one grid size, got {}", grids.len());
        }
        Ok(grids.into_iter().next().unwrap())
    }

    fn oracle(&self, factor: f64) -> Result<ShootingSolution> {
        let spec = self.spec.with_eps_scaled(factor);
        Ok(shooting_solve(&spec, C64::new(self.cfg.oracle_t_guess, 0.0), &ShootingConfig::default())?)
    }

    fn continuation(&self) -> Result<AdaptiveContinuation> {
        Ok(AdaptiveContinuation { primary: self.cfg.newton()?, ..AdaptiveContinuation::new(1.0) })
    }

    /// Initial field for the operator `base` scaled to `factor`. A linear seed
    /// is continued up to `factor` when `continue_linear` is set.
    fn start_field(&self, base: &Discretization, grid: &Grid, factor: f64, continue_linear: bool) -> Result<DiscreteField> {
        match self.cfg.seed_policy()? {
            SeedPolicy::Linear => {
                let lin = linear_solution(base)?;
                if !continue_linear || factor <= 0.0 {
                    return Ok(lin);
                }
                let ctl = AdaptiveContinuation { target: factor, ..self.continuation()? };
                match adaptive_continuation(base, 0.0, &lin, &ctl)? {
                    Ok(steps) => Ok(steps.last().map(|s| s.report.field.clone()).unwrap_or(lin)),
                    Err(f) => bail!("continuation to eps factor {factor} failed: {f}"),
                }
            }
            SeedPolicy::Oracle => Ok(DiscreteField::new(self.oracle(factor)?.sample(&grid.nodes()))?),
            SeedPolicy::File(p) => {
                let values = read_field(&p)?;
                if values.len() != grid.m_count() {
                    bail!("seed file has {} values, grid has {} nodes", values.len(), grid.m_count());
                }
                Ok(DiscreteField::new(values)?)
            }
        }
    }
}

fn pair(c: C64) -> serde_json::Value {
    json!([c.re, c.im])
}

pub fn run_solve(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let cx = Context1::new(cfg)?;
    let grid = cx.single_grid()?;
    let disc = Discretization::new(cx.scheme, &cx.spec, &grid)?;
    let policy = cfg.seed_policy()?;
    if cfg.continuation && policy != SeedPolicy::Linear {
        bail!("continuation starts from the linear seed; set seed = \"linear\"");
    }
    let seed = cx.start_field(&disc, &grid, 1.0, false)?;
    let newton = cfg.newton()?;
    let (rep, steps) = if cfg.continuation {
        match adaptive_continuation(&disc, 0.0, &seed, &cx.continuation()?)? {
            Ok(steps) => (steps.last().unwrap().report.clone(), steps.len()),
            Err(f) => (f.failed, f.completed.len()),
        }
    } else {
        (newton_solve(&disc, &seed, &newton)?, 0)
    };
    let z = grid.nodes();
    let rows: Vec<Vec<String>> = rep
        .field
        .values()
        .iter()
        .enumerate()
        .map(|(m, e)| vec![m.to_string(), num(z[m]), num(e.re), num(e.im), num(e.norm())])
        .collect();
    cx.csv(out, "solution.csv", &["m", "z", "re", "im", "abs"], &rows)?;
    let error_vs_oracle = if policy == SeedPolicy::Oracle {
        Some(linf_error(rep.field.values(), seed.values())?)
    } else {
        None
    };
    let report = json!({
        "config": cx.hash,
        "scheme": cx.scheme.name(),
        "version": crate::output::VERSION,
        "m_count": grid.m_count(),
        "h_tilde": grid.h_tilde(),
        "status": rep.status.as_str(),
        "iterations": rep.iterations,
        "continuation_steps": steps,
        "residual_history": rep.residual_history,
        "r": pair(rep.r),
        "t": pair(rep.t),
        "transmittance": rep.transmittance(),
        "reflectance": rep.r.norm_sqr(),
        "error_vs_oracle": error_vs_oracle,
    });
    write_json(&out.join("report.json"), &report)?;
    println!("{} after {} iterations, |T|^2 = {}", rep.status, rep.iterations, rep.transmittance());
    if let Some(e) = error_vs_oracle {
        println!("max-norm distance to the continuum reference: {e:e}");
    }
    Ok(RunOutcome { all_converged: rep.converged(), rows: 1 })
}

pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let cx = Context1::new(cfg)?;
    let sw = cfg.sweep.as_ref().context("sweep needs a [sweep] table")?;
    if !(sw.points >= 2 && sw.from >= 0.0 && sw.to > sw.from) {
        bail!("[sweep] needs 0 <= from < to and at least 2 points");
    }
    let grid = cx.single_grid()?;
    let base = Discretization::new(cx.scheme, &cx.spec, &grid)?;
    let up: Vec<f64> = (0..sw.points).map(|k| sw.from + (sw.to - sw.from) * k as f64 / (sw.points - 1) as f64).collect();
    let down: Vec<f64> = up.iter().rev().copied().collect();
    let sc = SweepConfig { primary: cfg.newton()?, ..SweepConfig::default() };
    let mut runs: Vec<(&str, Vec<SweepPoint>)> = Vec::new();
    match sw.direction {
        Direction::Up | Direction::Both => {
            let seed = cx.start_field(&base, &grid, sw.from, true)?;
            runs.push(("up", transmittance_sweep(&base, &up, SweepDirection::FromBelow, &seed, &sc)?));
            if sw.direction == Direction::Both {
                let top = runs[0].1.iter().rev().find(|p| p.status == SolveStatus::Converged).map(|p| p.report.field.clone());
                let top = top.context("upward sweep converged nowhere")?;
                runs.push(("down", transmittance_sweep(&base, &down, SweepDirection::FromAbove, &top, &sc)?));
            }
        }
        Direction::Down => {
            let seed = cx.start_field(&base, &grid, sw.to, true)?;
            runs.push(("down", transmittance_sweep(&base, &down, SweepDirection::FromAbove, &seed, &sc)?));
        }
    }
    let mut rows = Vec::new();
    let mut all = true;
    for (dir, pts) in &runs {
        for p in pts {
            all &= p.status == SolveStatus::Converged;
            rows.push(vec![num(p.eps_factor), num(p.transmittance), p.status.to_string(), p.iterations.to_string(), dir.to_string()]);
        }
    }
    cx.csv(out, "sweep.csv", &["eps_factor", "transmittance", "status", "iterations", "direction"], &rows)?;
    println!("{} sweep points written", rows.len());
    Ok(RunOutcome { all_converged: all, rows: rows.len() })
}

fn fit_model(cfg: &ExperimentConfig, design: u32) -> Result<FitModel> {
    match cfg.fit.as_slice() {
        [] => Ok(FitModel::PureOrder(design as f64)),
        [p] => Ok(FitModel::PureOrder(*p)),
        [p, q] => Ok(FitModel::MixedOrder(*p, *q)),
        _ => bail!("fit takes one or two orders"),
    }
}

struct ConvRow {
    m_count: Option<usize>,
    h_tilde: f64,
    error: f64,
    status: String,
    iterations: usize,
}

fn step_rows(cfg: &ExperimentConfig, scheme: kerr1d::SchemeKind) -> Result<Vec<ConvRow>> {
    let st = cfg.step.as_ref().unwrap();
    let exact = LinearStepSolution::new(st.nu_left, st.nu_right, cfg.k0)?;
    cfg.h_tilde_list()
        .into_iter()
        .map(|h| {
            let d = linear_step_discrete_solution(scheme, st.nu_left, st.nu_right, h, (0, 0))?;
            let error = (d.r - exact.r).norm().max((d.t - exact.t).norm());
            Ok(ConvRow { m_count: None, h_tilde: h, error, status: SolveStatus::Converged.to_string(), iterations: 0 })
        })
        .collect()
}

pub fn run_convergence(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let (hash, scheme) = (cfg.hash(), cfg.scheme_kind()?);
    let rows: Vec<ConvRow> = if cfg.step.is_some() {
        step_rows(cfg, scheme)?
    } else {
        let cx = Context1::new(cfg)?;
        let grids = cfg.grids(&cx.spec)?;
        let policy = cfg.seed_policy()?;
        if matches!(policy, SeedPolicy::File(_)) {
            bail!("convergence studies take the linear or oracle seed");
        }
        let linear = cx.spec.material().is_linear();
        let oracle = if linear { None } else { Some(cx.oracle(1.0)?) };
        let newton = cfg.newton()?;
        if grids.len() < 3 {
            bail!("convergence needs at least 3 grid sizes, got {}", grids.len());
        }
        grids
            .par_iter()
            .map(|grid| {
                let row = || -> Result<ConvRow> {
                let nodes = grid.nodes();
                let reference = match &oracle {
                    Some(sol) => sol.sample(&nodes),
                    None => transfer_matrix_solution(&cx.spec, &nodes)?.0,
                };
                let disc = Discretization::new(cx.scheme, &cx.spec, grid)?;
                let seed = match policy {
                    SeedPolicy::Oracle => DiscreteField::new(reference.clone())?,
                    _ => cx.start_field(&disc, grid, 1.0, cfg.continuation)?,
                };
                let rep = newton_solve(&disc, &seed, &newton)?;
                Ok(ConvRow {
                    m_count: Some(grid.m_count()),
                    h_tilde: grid.h_tilde(),
                    error: linf_error(rep.field.values(), &reference)?,
                    status: rep.status.to_string(),
                    iterations: rep.iterations,
                })
                };
                row().unwrap_or_else(|e| ConvRow {
                    m_count: Some(grid.m_count()),
                    h_tilde: grid.h_tilde(),
                    error: f64::NAN,
                    status: format!("error: {e:#}"),
                    iterations: 0,
                })
            })
            .collect()
    };
    let all = rows.iter().all(|r| r.status == SolveStatus::Converged.as_str());
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.m_count.map(|m| m.to_string()).unwrap_or_default(),
                num(r.h_tilde),
                num(r.error),
                r.status.clone(),
                r.iterations.to_string(),
            ]
        })
        .collect();
    write_csv(&out.join("convergence.csv"), &hash, scheme.name(), &["m_count", "h_tilde", "error", "status", "iterations"], &table)?;
    let data: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.status == SolveStatus::Converged.as_str() && r.error > 0.0).map(|r| (r.h_tilde, r.error)).collect();
    let model = fit_model(cfg, scheme.design_order())?;
    let fit = match fit_convergence(&data, model) {
        Ok(fit) => {
            println!("error(h) = {fit}");
            json!({
                "model": fit.to_string(),
                "terms": fit.terms,
                "observed_order": fit.observed_order,
                "fine_slope": fit.fine_slope,
            })
        }
        Err(e) => {
            println!("no fit: {e}");
            json!({ "error": e.to_string() })
        }
    };
    write_json(&out.join("convergence.json"), &json!({ "config": hash, "scheme": scheme.name(), "fit": fit }))?;
    Ok(RunOutcome { all_converged: all, rows: rows.len() })
}

pub fn run_coeffs(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let cx = Context1::new(cfg)?;
    let (nus, hs) = match &cfg.coeffs {
        Some(c) => (c.nu.clone(), c.h_tilde.clone()),
        None => {
            let mut nus: Vec<f64> = cx.spec.material().nu_values().to_vec();
            nus.sort_by(f64::total_cmp);
            nus.dedup();
            (nus, cfg.grids(&cx.spec)?.iter().map(Grid::h_tilde).collect())
        }
    };
    let mut rows = Vec::new();
    for &nu in &nus {
        for &h in &hs {
            for r in coefficient_table(nu, h) {
                let idx = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
                rows.push(vec![r.i.to_string(), idx(r.j), idx(r.k), num(r.value), num(nu), num(h)]);
            }
        }
    }
    cx.csv(out, "coeffs.csv", &["i", "j", "k", "value", "nu", "h_tilde"], &rows)?;
    println!("{} coefficient rows written", rows.len());
    Ok(RunOutcome { all_converged: true, rows: rows.len() })
}

pub fn run_probe(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let cx = Context1::new(cfg)?;
    let pr = cfg.probe.as_ref().context("probe needs a [probe] table")?;
    if pr.increments.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        bail!("[probe] increments must be positive");
    }
    let grid = cx.single_grid()?;
    let base = Discretization::new(cx.scheme, &cx.spec, &grid)?;
    let start = cx.start_field(&base, &grid, pr.eps_start, true)?;
    let newton = cfg.newton()?.with_tol(pr.tol);
    let reports: Vec<SolveReport> = pr
        .increments
        .par_iter()
        .map(|d| newton_solve(&base.with_eps_scaled(pr.eps_start + d), &start, &newton).map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = pr
        .increments
        .iter()
        .zip(&reports)
        .map(|(d, r)| {
            vec![
                num(pr.eps_start),
                num(*d),
                r.status.to_string(),
                r.iterations.to_string(),
                num(r.reduction_orders()),
                num(r.transmittance()),
            ]
        })
        .collect();
    cx.csv(out, "probe.csv", &["eps_start", "increment", "status", "iterations", "reduction_orders", "transmittance"], &rows)?;
    let ok = reports.iter().filter(|r| r.converged()).count();
    println!("{ok} of {} increments converged", reports.len());
    Ok(RunOutcome { all_converged: ok == reports.len(), rows: rows.len() })
}

/// Mean wall-clock seconds of one Newton iteration on `m` nodes after a warmup.
pub fn seconds_per_iteration(cx_spec: &ProblemSpec, scheme: kerr1d::SchemeKind, m: usize, iterations: usize) -> Result<f64> {
    let grid = kerr1d::build_grid(cx_spec, m)?;
    let disc = Discretization::new(scheme, cx_spec, &grid)?;
    let seed = DiscreteField::zeros(m);
    let one = NewtonConfig::plain().with_max_iter(1);
    newton_solve(&disc, &seed, &one)?;
    let t = Instant::now();
    for _ in 0..iterations {
        std::hint::black_box(newton_solve(&disc, &seed, &one)?);
    }
    Ok(t.elapsed().as_secs_f64() / iterations as f64)
}

pub fn run_timing(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let cx = Context1::new(cfg)?;
    let tm = cfg.timing.as_ref().context("timing needs a [timing] table")?;
    if tm.iterations < 5 {
        bail!("[timing] needs at least 5 iterations");
    }
    let mut rows = Vec::new();
    for &m in &tm.m {
        let s = seconds_per_iteration(&cx.spec, cx.scheme, m, tm.iterations)?;
        println!("M = {m}: {s:.3e} s per iteration");
        rows.push(vec![m.to_string(), num(s), tm.iterations.to_string()]);
    }
    cx.csv(out, "timing.csv", &["m_count", "seconds_per_iteration", "iterations"], &rows)?;
    Ok(RunOutcome { all_converged: true, rows: rows.len() })
}
