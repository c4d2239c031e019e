mod common;

use kerr1d::linearization::*;
use kerr1d::schemes::max_norm;
use kerr1d::solvers::{newton_solve, NewtonConfig};
use kerr1d::*;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| C64::new(a, b))
}

fn layers() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.5f64..3.0, 0.0f64..1.0), 1..=4)
}

fn scheme() -> impl Strategy<Value = SchemeKind> {
    prop::sample::select(SchemeKind::ALL.to_vec())
}

const M: usize = 61;

fn disc(scheme: SchemeKind, layers: &[(f64, f64)]) -> Discretization {
    let spec = ProblemSpec::new(2.0, MaterialProfile::equal_layers(3.0, layers).unwrap()).unwrap();
    let grid = build_grid(&spec, M).unwrap();
    Discretization::new(scheme, &spec, &grid).unwrap()
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap()).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobian_matches_directional_derivative(
        scheme in scheme(),
        layers in layers(),
        e in prop::collection::vec(c64(), M),
        d in prop::collection::vec(c64(), M),
    ) {
        let disc = disc(scheme, &layers);
        let f0 = disc.residual(&e).unwrap();
        let jd = assemble_pair(&disc, &e, Linearization::Newton).unwrap().apply(&d);
        let remainder = |t: f64| {
            let shifted: Vec<C64> = e.iter().zip(&d).map(|(a, b)| a + b * t).collect();
            let f = disc.residual(&shifted).unwrap();
            (0..M).map(|i| (f[i] - f0[i] - jd[i] * t).norm()).fold(0.0, f64::max)
        };
        let (r1, r2) = (remainder(1e-3), remainder(5e-4));
        prop_assert!((r1 / r2 - 4.0).abs() < 0.2, "ratio {}", r1 / r2);
    }

    #[test]
    fn lifted_jacobian_acts_like_complex_pair(
        scheme in scheme(),
        layers in layers(),
        e in prop::collection::vec(c64(), M),
        d in prop::collection::vec(c64(), M),
    ) {
        let disc = disc(scheme, &layers);
        let pair = assemble_pair(&disc, &e, Linearization::Newton).unwrap();
        let direct = pair.apply(&d);
        let lifted = from_real(&pair.to_real().apply(&to_real(&d)));
        for (a, b) in direct.iter().zip(&lifted) {
            prop_assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn lift_identities(j1 in c64(), j2 in c64(), x in c64()) {
        let b = lift_pair(j1, j2);
        let y = j1 * x + j2 * x.conj();
        prop_assert!((b[0][0] * x.re + b[0][1] * x.im - y.re).abs() < 1e-14);
        prop_assert!((b[1][0] * x.re + b[1][1] * x.im - y.im).abs() < 1e-14);
        // Acting on conj(x) swaps the roles of j1 and j2.
        let f = lift_pair(j2, j1);
        for r in 0..2 {
            prop_assert_eq!(b[r][0], f[r][0]);
            prop_assert_eq!(b[r][1], -f[r][1]);
        }
        prop_assert_eq!(lift_pair(j1, C64::new(0.0, 0.0)), complex_to_real_block(j1));
    }

    #[test]
    fn banded_solve_matches_dense(
        n in 3usize..12,
        p in 1usize..3,
        seed in prop::collection::vec(-1.0f64..1.0, 4 * 5 * 12 + 24),
    ) {
        let mut jac = BlockBandedJacobian::identity(n, p);
        let mut it = seed.iter().cycle();
        for (i, row) in jac.blocks.iter_mut().enumerate() {
            for (k, b) in row.iter_mut().enumerate() {
                for r in 0..2 {
                    for c in 0..2 {
                        b[r][c] = *it.next().unwrap();
                    }
                }
                if k == p {
                    // Diagonal dominance keeps elimination without pivoting stable.
                    b[0][0] += 8.0;
                    b[1][1] += 8.0;
                }
                let _ = i;
            }
        }
        let rhs: Vec<[f64; 2]> = (0..n).map(|_| [*it.next().unwrap(), *it.next().unwrap()]).collect();
        let x = jac.solve(&rhs).unwrap();
        let dense = dense_solve(jac.to_dense(), rhs.iter().flatten().copied().collect());
        for (a, b) in x.iter().flatten().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_keeps_layer_values(layers in layers(), factor in 1usize..4) {
        let spec = ProblemSpec::new(2.0, MaterialProfile::equal_layers(3.0, &layers).unwrap()).unwrap();
        let coarse_cells = 12;
        let coarse = sample_cells(&spec, &build_grid(&spec, coarse_cells + 1).unwrap());
        let fine = sample_cells(&spec, &build_grid(&spec, coarse_cells * factor + 1).unwrap());
        for c in 1..=coarse_cells {
            for s in 0..factor {
                let f = (c - 1) * factor + s + 1;
                prop_assert_eq!(coarse.nu[c], fine.nu[f]);
                prop_assert_eq!(coarse.eps[c], fine.eps[f]);
            }
        }
        prop_assert_eq!((fine.nu[0], fine.eps[0]), (1.0, 0.0));
        prop_assert_eq!((fine.nu[fine.len() - 1], fine.eps[fine.len() - 1]), (1.0, 0.0));
    }

    #[test]
    fn linear_problems_take_one_iteration(scheme in scheme(), layers in layers()) {
        let linear: Vec<(f64, f64)> = layers.iter().map(|l| (l.0, 0.0)).collect();
        let spec = ProblemSpec::new(2.0, MaterialProfile::equal_layers(3.0, &linear).unwrap()).unwrap();
        let grid = build_grid(&spec, 121).unwrap();
        let disc = Discretization::new(scheme, &spec, &grid).unwrap();
        let rep = newton_solve(&disc, &DiscreteField::zeros(121), &NewtonConfig::plain()).unwrap();
        prop_assert!(rep.converged());
        prop_assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn residual_is_phase_covariant(scheme in scheme(), layers in layers(), e in prop::collection::vec(c64(), M), phi in 0.0f64..std::f64::consts::TAU) {
        let spec = ProblemSpec::new(2.0, MaterialProfile::equal_layers(3.0, &layers).unwrap()).unwrap();
        let grid = build_grid(&spec, M).unwrap();
        let disc = Discretization::new(scheme, &spec, &grid).unwrap();
        let rot = C64::from_polar(1.0, phi);
        let f = disc.residual(&e).unwrap();
        let er: Vec<C64> = e.iter().map(|v| v * rot).collect();
        let fr = disc.residual(&er).unwrap();
        // Rows away from the boundary do not see the fixed incoming wave.
        let hw = scheme.half_width();
        for i in hw..M - hw {
            prop_assert!((fr[i] - f[i] * rot).norm() < 1e-9 * (1.0 + max_norm(&f)));
        }
    }
}
