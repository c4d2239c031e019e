//! Acceptance suite: one PASS/FAIL line per criterion. The exit status is
//! nonzero on a failed criterion only when `ACCEPTANCE_STRICT=1`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use kerr1d::coefficients::{tensor_quadrature_oracle, FourthOrderTensors};
use kerr1d::linearization::{assemble_pair, lift_pair, Linearization};
use kerr1d::oracles::{fit_convergence, linear_step_discrete_solution, FitModel, LinearStepSolution};
use kerr1d::solvers::*;
use kerr1d::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within_factor(got: f64, want: f64, factor: f64) -> bool {
    got <= want * factor && got >= want / factor
}

fn coefficient_fidelity() -> Outcome {
    let mut worst_table: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    for nu in [0.5, 1.0, 1.69, 4.0] {
        for h in [0.01, 0.1, 0.4, 1.0] {
            let t = FourthOrderTensors::new(nu, h);
            for (i, terms) in TABLE_F.iter().enumerate() {
                let want = eval_terms(terms, nu, h);
                worst_table = worst_table.max(((t.f[i] - want) / want).abs());
            }
            for ((i, j, k), terms) in TABLE_G {
                let want = eval_terms(terms, nu, h);
                let quad = tensor_quadrature_oracle(nu, h, i, j, k);
                for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    worst_table = worst_table.max(((t.g[a][b][c] - want) / want).abs());
                    worst_quad = worst_quad.max(((t.g[a][b][c] - quad) / quad).abs());
                }
            }
        }
    }
    let pass = worst_table <= 1e-13 && worst_quad <= 1e-13;
    outcome(pass, format!("max rel dev vs table {worst_table:.1e}, vs quadrature {worst_quad:.1e}"))
}

fn fmt_errors(errors: &[f64]) -> String {
    errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ")
}

/// Errors against targets and the fitted order; `None` if any solve failed.
fn table_case(scheme: SchemeKind, spec: &ProblemSpec, h: &[f64], t_guess: f64) -> Option<Vec<(f64, f64)>> {
    let mut data = Vec::new();
    for &ht in h {
        let run = oracle_error(scheme, spec, ht, t_guess);
        if !run.report.converged() {
            return None;
        }
        data.push((run.h_tilde, run.error));
    }
    Some(data)
}

fn check_table(label: &str, data: Option<Vec<(f64, f64)>>, targets: &[f64]) -> (bool, String) {
    let Some(data) = data else {
        return (false, format!("{label}: a solve did not converge"));
    };
    let errors: Vec<f64> = data.iter().map(|d| d.1).collect();
    let fit = fit_convergence(&data, FitModel::PureOrder(4.0)).unwrap();
    let close = errors.iter().zip(targets).all(|(e, t)| within_factor(*e, *t, 3.0));
    let pass = close && fit.observed_order >= 3.9;
    (pass, format!("{label}: [{}] order {:.2}", fmt_errors(&errors), fit.observed_order))
}

fn table_two() -> Outcome {
    let h4 = [-1.5, -2.0, -2.5, -3.0].map(|e| h_tilde_pow(8.0, e));
    let weak = table_case(SchemeKind::Fv4, &homogeneous(1.0201, 0.01), &h4, 1.0);
    let (p1, d1) = check_table("weak", weak, &[1.29e-3, 1.28e-5, 1.28e-7, 1.33e-9]);
    let strong = table_case(SchemeKind::Fv4, &homogeneous(1.69, 0.845), &h4[1..], 1.0);
    let (p2, d2) = check_table("strong", strong, &[9.12e-5, 9.13e-7, 9.16e-9]);
    outcome(p1 && p2, format!("{d1}; {d2}"))
}

fn table_two_contrast() -> Outcome {
    let h = [-1.5, -2.0, -2.5, -3.0].map(|e| h_tilde_pow(8.0, e));
    let spec = homogeneous(1.69, 0.845);
    let (Some(fd5), Some(fv4)) = (table_case(SchemeKind::Fd5, &spec, &h, 1.0), table_case(SchemeKind::Fv4, &spec, &h[1..], 1.0))
    else {
        return outcome(false, "a solve did not converge");
    };
    let mixed = fit_convergence(&fd5, FitModel::MixedOrder(2.0, 4.0));
    let fv4_fit = fit_convergence(&fv4, FitModel::PureOrder(4.0)).unwrap();
    let fd5_pure = fit_convergence(&fd5, FitModel::PureOrder(4.0)).unwrap();
    let (c2, detail) = match &mixed {
        Ok(f) => (f.coefficient(2.0).unwrap(), f.to_string()),
        Err(e) => (0.0, e.to_string()),
    };
    let pass = c2 > 0.0 && fd5_pure.fine_slope < 3.0 && fv4_fit.observed_order >= 3.9;
    outcome(
        pass,
        format!(
            "fd5 [{}] fine slope {:.2}, mixed fit {detail}; fv4 order {:.2}",
            fmt_errors(&fd5.iter().map(|d| d.1).collect::<Vec<_>>()),
            fd5_pure.fine_slope,
            fv4_fit.observed_order
        ),
    )
}

fn table_three() -> Outcome {
    let h = [-1.5, -2.0, -2.5].map(|e| h_tilde_pow(4.0, e));
    let Some(data) = table_case(SchemeKind::Fv4, &two_layer(), &h, 1.0) else {
        return outcome(false, "a solve did not converge");
    };
    let errors: Vec<f64> = data.iter().map(|d| d.1).collect();
    let fit = fit_convergence(&data, FitModel::PureOrder(4.0)).unwrap();
    let c = fit.coefficient(4.0).unwrap();
    let close = errors.iter().zip([3.72e-4, 3.69e-6, 3.69e-8]).all(|(e, t)| within_factor(*e, t, 3.0));
    let pass = close && (0.5..=4.5).contains(&c) && fit.observed_order >= 3.9;
    outcome(pass, format!("[{}] coefficient {c:.3} order {:.2}", fmt_errors(&errors), fit.observed_order))
}

fn step_medium() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for nu_right in [1.21, 4.0] {
        let exact = LinearStepSolution::new(1.0, nu_right, K0).unwrap();
        let data: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let d = linear_step_discrete_solution(SchemeKind::Fv4, 1.0, nu_right, h, (0, 0)).unwrap();
                (h, (d.r - exact.r).norm().max((d.t - exact.t).norm()))
            })
            .collect();
        let fit = fit_convergence(&data, FitModel::PureOrder(4.0)).unwrap();
        pass &= fit.observed_order >= 3.9;
        parts.push(format!("nu_right {nu_right}: order {:.3}", fit.observed_order));
    }
    outcome(pass, parts.join("; "))
}

fn quadratic_tail(history: &[f64]) -> bool {
    // e_{k+1} / e_k^2 stays bounded while e_{k+1} / e_k shrinks.
    if history.len() < 4 {
        return false;
    }
    let t = &history[history.len() - 4..];
    let r1 = t[2] / t[1];
    let r2 = t[3] / t[2];
    r2 < r1 && r2 < 0.1
}

fn newton_behaviour() -> Outcome {
    let ht = h_tilde_pow(8.0, -2.5);
    let spec = homogeneous(1.0, 1.0);
    let grid = Grid::for_h_tilde(&spec, ht).unwrap();
    let base = Discretization::new(SchemeKind::Fv4, &spec, &grid).unwrap();

    let half = homogeneous(1.0, 0.5);
    let seed = oracle_field(&half, &grid, 1.0);
    let a = newton_solve(&base.with_eps_scaled(0.5), &seed, &NewtonConfig::plain()).unwrap();
    let orders = a.reduction_orders();
    let pass_a = a.converged() && orders >= 9.0 && a.iterations <= 8 && quadratic_tail(&a.residual_history);
    let detail_a = format!(
        "(a) {} in {} it, {:.1} orders from r0 {:.1e}, quadratic tail {}",
        a.status,
        a.iterations,
        orders,
        a.initial_residual(),
        quadratic_tail(&a.residual_history)
    );

    let lin = linear_solution(&base).unwrap();
    let low = newton_solve(&base.with_eps_scaled(0.05), &lin, &NewtonConfig::plain()).unwrap();
    let high = newton_solve(&base.with_eps_scaled(0.15), &lin, &NewtonConfig::plain()).unwrap();
    let pass_b = low.converged() && !high.converged();
    let detail_b = format!("(b) eps 0.05 {}, eps 0.15 {}", low.status, high.status);

    let strict = AdaptiveContinuation { fallbacks: Vec::new(), ..AdaptiveContinuation::new(3.0) };
    let (pass_c, detail_c) = match adaptive_continuation(&base, 0.0, &lin, &strict).unwrap() {
        Ok(steps) => {
            let worst = steps.iter().map(|s| s.report.iterations).max().unwrap_or(0);
            (worst <= 8, format!("(c) reached 3 in {} steps, max {worst} it", steps.len()))
        }
        Err(f) => {
            let reached = f.completed.len();
            let relaxed = match adaptive_continuation(&base, 0.0, &lin, &AdaptiveContinuation::new(3.0)).unwrap() {
                Ok(steps) => format!("reached 3 in {} steps", steps.len()),
                Err(g) => format!("stalled at eps {:.4} after {} steps", g.eps_factor, g.completed.len()),
            };
            (false, format!("(c) plain Newton stalled at eps {:.4} after {reached} steps; with relaxed fallbacks {relaxed}", f.eps_factor))
        }
    };
    outcome(pass_a && pass_b && pass_c, format!("{detail_a}; {detail_b}; {detail_c}"))
}

fn frozen_thresholds() -> Outcome {
    let ht = h_tilde_pow(8.0, -2.5);
    let mut pass = true;
    let mut parts = Vec::new();
    for (omega, good, bad) in [(1.0, 0.10, 0.25), (0.1, 0.25, 0.45)] {
        let cfg = NewtonConfig { omega, max_iter: 5000, ..NewtonConfig::plain() };
        for (eps, want) in [(good, true), (bad, false)] {
            let spec = homogeneous(1.0, eps);
            let grid = Grid::for_h_tilde(&spec, ht).unwrap();
            let disc = Discretization::new(SchemeKind::Fd2, &spec, &grid).unwrap();
            let rep = frozen_solve(&disc, &oracle_field(&spec, &grid, 1.0), &cfg).unwrap();
            pass &= rep.converged() == want;
            parts.push(format!("omega {omega} eps {eps}: {} ({} it)", rep.status, rep.iterations));
        }
    }
    outcome(pass, parts.join("; "))
}

fn first_jump(points: &[SweepPoint]) -> Option<(f64, f64)> {
    points
        .windows(2)
        .map(|w| ((w[1].transmittance - w[0].transmittance).abs(), 0.5 * (w[0].eps_factor + w[1].eps_factor)))
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .map(|(size, at)| (at, size))
}

fn hysteresis() -> Outcome {
    let spec = homogeneous(1.0, 1.0);
    let grid = Grid::for_h_tilde(&spec, h_tilde_pow(8.0, -2.5)).unwrap();
    let base = Discretization::new(SchemeKind::Fv4, &spec, &grid).unwrap();
    let lin = linear_solution(&base).unwrap();
    let start = match adaptive_continuation(&base, 0.0, &lin, &AdaptiveContinuation::new(0.70)).unwrap() {
        Ok(steps) => steps.last().unwrap().report.field.clone(),
        Err(f) => return outcome(false, format!("continuation to 0.70 failed: {f}")),
    };
    let up: Vec<f64> = (0..=80).map(|k| 0.70 + 0.0005 * k as f64).collect();
    let cfg = SweepConfig::default();
    let su = transmittance_sweep(&base, &up, SweepDirection::FromBelow, &start, &cfg).unwrap();
    let top = su.last().unwrap().report.field.clone();
    let down: Vec<f64> = up.iter().rev().copied().collect();
    let mut sd = transmittance_sweep(&base, &down, SweepDirection::FromAbove, &top, &cfg).unwrap();
    let all_converged = su.iter().chain(&sd).all(|p| p.status == SolveStatus::Converged);
    let (up_at, _) = first_jump(&su).unwrap();
    let (down_at, _) = first_jump(&sd).unwrap();
    sd.reverse();
    let split: Vec<f64> = su
        .iter()
        .zip(&sd)
        .filter(|(a, b)| (a.transmittance - b.transmittance).abs() > 1e-3)
        .map(|(a, _)| a.eps_factor)
        .collect();
    let covers = [0.7240, 0.7245].iter().all(|e| split.iter().any(|s| (s - e).abs() < 1e-9));
    let (lo, hi) = (split.first().copied().unwrap_or(f64::NAN), split.last().copied().unwrap_or(f64::NAN));
    let pass = all_converged && covers && (up_at - 0.7249).abs() <= 0.002 && (down_at - 0.7234).abs() <= 0.002;
    outcome(pass, format!("branches differ on [{lo:.4}, {hi:.4}], up jump at {up_at:.5}, down jump at {down_at:.5}"))
}

fn jacobian_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst_ratio_dev: f64 = 0.0;
    for trial in 0..10 {
        let layers: Vec<(f64, f64)> = (0..rng.gen_range(1..=3)).map(|_| (rng.gen_range(0.5..3.0), rng.gen_range(0.0..1.0))).collect();
        let spec = ProblemSpec::new(2.0, MaterialProfile::equal_layers(3.0, &layers).unwrap()).unwrap();
        let grid = build_grid(&spec, 61).unwrap();
        for scheme in SchemeKind::ALL {
            let disc = Discretization::new(scheme, &spec, &grid).unwrap();
            let e: Vec<C64> = (0..61).map(|_| C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))).collect();
            let d: Vec<C64> = (0..61).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let f0 = disc.residual(&e).unwrap();
            let jd = assemble_pair(&disc, &e, Linearization::Newton).unwrap().apply(&d);
            let remainder = |t: f64| {
                let shifted: Vec<C64> = e.iter().zip(&d).map(|(a, b)| a + b * t).collect();
                let f = disc.residual(&shifted).unwrap();
                (0..61).map(|i| (f[i] - f0[i] - jd[i] * t).norm()).fold(0.0, f64::max)
            };
            let ratio = remainder(1e-3) / remainder(5e-4);
            worst_ratio_dev = worst_ratio_dev.max((ratio - 4.0).abs());
            let _ = trial;
        }
    }
    let mut lift_dev: f64 = 0.0;
    for _ in 0..100 {
        let c = |r: &mut ChaCha8Rng| C64::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        let (j1, j2, x) = (c(&mut rng), c(&mut rng), c(&mut rng));
        let b = lift_pair(j1, j2);
        let y = j1 * x + j2 * x.conj();
        let by = [b[0][0] * x.re + b[0][1] * x.im, b[1][0] * x.re + b[1][1] * x.im];
        lift_dev = lift_dev.max((by[0] - y.re).abs()).max((by[1] - y.im).abs());
        let flipped = lift_pair(j2, j1);
        for r in 0..2 {
            lift_dev = lift_dev.max((b[r][0] - flipped[r][0]).abs()).max((b[r][1] + flipped[r][1]).abs());
        }
    }
    let spec = ProblemSpec::new(8.0, MaterialProfile::equal_layers(10.0, &[(1.21, 0.0), (2.25, 0.0)]).unwrap()).unwrap();
    let grid = build_grid(&spec, 801).unwrap();
    let one_step = SchemeKind::ALL.iter().all(|&s| {
        let disc = Discretization::new(s, &spec, &grid).unwrap();
        let rep = newton_solve(&disc, &DiscreteField::zeros(801), &NewtonConfig::plain()).unwrap();
        rep.converged() && rep.iterations == 1
    });
    let pass = worst_ratio_dev < 0.2 && lift_dev < 1e-14 && one_step;
    outcome(pass, format!("remainder ratio |r(t)/r(t/2) - 4| <= {worst_ratio_dev:.3}, lift dev {lift_dev:.1e}, linear solves in one iteration {one_step}"))
}

fn per_iteration_seconds(m: usize) -> f64 {
    let spec = homogeneous(1.0, 0.3);
    let grid = build_grid(&spec, m).unwrap();
    let disc = Discretization::new(SchemeKind::Fv4, &spec, &grid).unwrap();
    let seed = linear_solution(&disc).unwrap();
    let cfg = NewtonConfig::plain().with_max_iter(1);
    let reps = (400_000 / m).max(3);
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let t = Instant::now();
        for _ in 0..reps {
            std::hint::black_box(newton_solve(&disc, &seed, &cfg).unwrap());
        }
        best = best.min(t.elapsed().as_secs_f64() / reps as f64);
    }
    best
}

fn complexity() -> Outcome {
    let sizes = [100usize, 1000, 10000];
    let per_node: Vec<f64> = sizes.iter().map(|&m| per_iteration_seconds(m) / m as f64).collect();
    let hi = per_node.iter().cloned().fold(0.0, f64::max);
    let lo = per_node.iter().cloned().fold(f64::INFINITY, f64::min);
    let parts: Vec<String> = sizes.iter().zip(&per_node).map(|(m, t)| format!("M={m}: {:.1} ns/node", t * 1e9)).collect();
    outcome(hi / lo <= 1.5, format!("{}; spread {:.2}", parts.join(", "), hi / lo))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("coefficient fidelity", coefficient_fidelity),
        ("homogeneous slab errors", table_two),
        ("five-point degradation contrast", table_two_contrast),
        ("two-layer slab errors", table_three),
        ("step medium order", step_medium),
        ("newton behaviour", newton_behaviour),
        ("frozen iteration thresholds", frozen_thresholds),
        ("bistability hysteresis", hysteresis),
        ("jacobian exactness", jacobian_exactness),
        ("linear complexity", complexity),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name} ({:.1}s): {}", k + 1, t.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria failed", failed, criteria.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
