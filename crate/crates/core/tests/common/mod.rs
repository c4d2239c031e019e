#![allow(dead_code)]

use kerr1d::oracles::{shooting_reference, ShootingConfig};
use kerr1d::solvers::{newton_solve, NewtonConfig, SolveReport};
use kerr1d::*;
use num_rational::Ratio;

/// Terms `(numerator, denominator, power of (h_tilde/4)^2, power of nu)`.
pub type Terms = &'static [(i128, i128, u32, u32)];

/// Printed `f_i` expressions, expanded.
pub const TABLE_F: [Terms; 4] = [
    &[(3, 8, 0, 0), (3, 8, 1, 1)],
    &[(3, 8, 1, 0)],
    &[(1, 8, 0, 0), (7, 24, 1, 1)],
    &[(7, 24, 1, 0)],
];

/// Printed `g_ijk` expressions for the 20 sorted index triples.
pub const TABLE_G: [((usize, usize, usize), Terms); 20] = [
    ((0, 0, 0), &[(15, 64, 0, 0), (9, 16, 1, 1), (21, 32, 2, 2), (3, 10, 3, 3)]),
    ((0, 0, 1), &[(3, 16, 1, 0), (7, 16, 2, 1), (3, 10, 3, 2)]),
    ((0, 1, 1), &[(7, 32, 2, 0), (3, 10, 3, 1)]),
    ((1, 1, 1), &[(3, 10, 3, 0)]),
    ((0, 0, 2), &[(11, 192, 0, 0), (41, 144, 1, 1), (1949, 4320, 2, 2), (2791, 11340, 3, 3)]),
    ((0, 1, 2), &[(53, 720, 1, 0), (845, 3024, 2, 1), (2791, 11340, 3, 2)]),
    ((0, 0, 3), &[(11, 80, 1, 0), (577, 1680, 2, 1), (2791, 11340, 3, 2)]),
    ((0, 1, 3), &[(577, 3360, 2, 0), (2791, 11340, 3, 1)]),
    ((1, 1, 2), &[(3257, 30240, 2, 0), (2791, 11340, 3, 1)]),
    ((1, 1, 3), &[(2791, 11340, 3, 0)]),
    ((0, 2, 2), &[(5, 192, 0, 0), (23, 144, 1, 1), (1379, 4320, 2, 2), (2329, 11340, 3, 3)]),
    ((1, 2, 2), &[(29, 720, 1, 0), (2743, 15120, 2, 1), (2329, 11340, 3, 2)]),
    ((0, 2, 3), &[(43, 720, 1, 0), (691, 3024, 2, 1), (2329, 11340, 3, 2)]),
    ((1, 2, 3), &[(2743, 30240, 2, 0), (2329, 11340, 3, 1)]),
    ((0, 3, 3), &[(463, 3360, 2, 0), (2329, 11340, 3, 1)]),
    ((1, 3, 3), &[(2329, 11340, 3, 0)]),
    ((2, 2, 2), &[(1, 64, 0, 0), (5, 48, 1, 1), (67, 288, 2, 2), (47, 270, 3, 3)]),
    ((2, 2, 3), &[(5, 144, 1, 0), (67, 432, 2, 1), (47, 270, 3, 2)]),
    ((2, 3, 3), &[(67, 864, 2, 0), (47, 270, 3, 1)]),
    ((3, 3, 3), &[(47, 270, 3, 0)]),
];

pub fn eval_terms(terms: Terms, nu: f64, h_tilde: f64) -> f64 {
    let s = (h_tilde / 4.0).powi(2);
    terms.iter().map(|&(n, d, p, r)| n as f64 / d as f64 * s.powi(p as i32) * nu.powi(r as i32)).sum()
}

/// Terms as exact `(coefficient, power of s, power of nu)`, sorted.
pub fn exact_terms(terms: Terms) -> Vec<(Ratio<i128>, u32, u32)> {
    let mut v: Vec<_> = terms.iter().map(|&(n, d, p, r)| (Ratio::new(n, d), p, r)).collect();
    v.sort_by_key(|t| (t.1, t.2));
    v
}

pub const K0: f64 = 8.0;
pub const Z_MAX: f64 = 10.0;

pub fn homogeneous(nu: f64, eps: f64) -> ProblemSpec {
    ProblemSpec::new(K0, MaterialProfile::homogeneous(Z_MAX, nu, eps).unwrap()).unwrap()
}

pub fn two_layer() -> ProblemSpec {
    ProblemSpec::new(K0, MaterialProfile::equal_layers(Z_MAX, &[(1.21, 0.121), (1.69, 0.507)]).unwrap()).unwrap()
}

pub fn h_tilde_pow(base: f64, exponent: f64) -> f64 {
    base * 10f64.powf(exponent)
}

/// Continuum reference sampled on the grid, locked to the root nearest `t_guess`.
pub fn oracle_field(spec: &ProblemSpec, grid: &Grid, t_guess: f64) -> DiscreteField {
    let (samples, _) = shooting_reference(spec, &grid.nodes(), C64::new(t_guess, 0.0), &ShootingConfig::default()).unwrap();
    DiscreteField::new(samples).unwrap()
}

/// Discrete solution seeded from the continuum reference, and its max-norm
/// distance to that reference, at the grid's actual `h_tilde`.
pub struct OracleRun {
    pub h_tilde: f64,
    pub error: f64,
    pub report: SolveReport,
}

pub fn oracle_error(scheme: SchemeKind, spec: &ProblemSpec, h_tilde: f64, t_guess: f64) -> OracleRun {
    let grid = Grid::for_h_tilde(spec, h_tilde).unwrap();
    let reference = oracle_field(spec, &grid, t_guess);
    let disc = Discretization::new(scheme, spec, &grid).unwrap();
    let rep = newton_solve(&disc, &reference, &NewtonConfig::plain()).unwrap();
    let err = kerr1d::oracles::linf_error(rep.field.values(), reference.values()).unwrap();
    OracleRun { h_tilde: grid.h_tilde(), error: err, report: rep }
}
