//! Stencil coefficients: the second- and fourth-order cubic tensors, the
//! exterior stencil pair `(L0, L1)`, and the Hermite–Birkhoff interpolant the
//! fourth-order tensors are built from.
//!
//! The fourth-order tensors are generated once by exact rational polynomial
//! algebra and then evaluated in floating point for each `(nu, h_tilde)`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{NlhError, Result};
use crate::schemes::SchemeKind;
use crate::C64;

type Q = Ratio<i128>;

fn q(n: i128, d: i128) -> Q {
    Ratio::new(n, d)
}

/// Polynomial in `(zeta, nu, h_tilde^2)` with rational coefficients, keyed by
/// exponent triple.
#[derive(Debug, Clone, Default, PartialEq)]
struct Poly3 {
    terms: BTreeMap<(u32, u32, u32), Q>,
}

impl Poly3 {
    fn monomial(c: Q, zeta: u32, nu: u32, h2: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((zeta, nu, h2), c);
        }
        Self { terms }
    }

    fn constant(c: Q) -> Self {
        Self::monomial(c, 0, 0, 0)
    }

    fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms.entry(*e).or_insert_with(Q::zero);
            *entry += *c;
            if entry.is_zero() {
                terms.remove(e);
            }
        }
        Self { terms }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for ((a0, a1, a2), ca) in &self.terms {
            for ((b0, b1, b2), cb) in &other.terms {
                out = out.add(&Self::monomial(*ca * *cb, a0 + b0, a1 + b1, a2 + b2));
            }
        }
        out
    }

    /// Integral over `zeta` in `[0, 1/2]`; the result has no `zeta` dependence.
    fn integrate_half_cell(&self) -> CoefficientPolynomial {
        let mut acc: BTreeMap<(u32, u32), Q> = BTreeMap::new();
        for ((z, nu, h2), c) in &self.terms {
            let weight = Q::one() / Q::from(1i128 << (z + 1)) / Q::from(*z as i128 + 1);
            // h_tilde^2 = 16 s
            let scale = Q::from(16i128.pow(*h2));
            let entry = acc.entry((*h2, *nu)).or_insert_with(Q::zero);
            *entry += *c * weight * scale;
        }
        CoefficientPolynomial {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|((s, nu), c)| (c, s, nu)).collect(),
        }
    }
}

/// Exact polynomial in `s = (h_tilde / 4)^2` and `nu`: a sum of
/// `c * s^p * nu^r` with rational `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPolynomial {
    terms: Vec<(Ratio<i128>, u32, u32)>,
}

impl CoefficientPolynomial {
    /// Terms as `(coefficient, power of s, power of nu)`, sorted by power of `s`.
    pub fn terms(&self) -> &[(Ratio<i128>, u32, u32)] {
        &self.terms
    }

    pub fn eval(&self, nu: f64, h_tilde: f64) -> f64 {
        let s = (h_tilde / 4.0) * (h_tilde / 4.0);
        self.terms
            .iter()
            .map(|(c, p, r)| c.to_f64().unwrap() * s.powi(*p as i32) * nu.powi(*r as i32))
            .sum()
    }
}

/// The four basis polynomials in `(zeta, nu, h_tilde^2)`.
fn basis_polys() -> [Poly3; 4] {
    let one = Poly3::constant(Q::one());
    let zeta = Poly3::monomial(Q::one(), 1, 0, 0);
    let one_minus_zeta = one.add(&Poly3::monomial(-Q::one(), 1, 0, 0));
    let h2_sixth = Poly3::monomial(q(1, 6), 0, 0, 1);
    let nu_h2_sixth = Poly3::monomial(q(1, 6), 0, 1, 1);
    let neg_one = Poly3::constant(-Q::one());
    // 1 - (1 - zeta)^2 and 1 - zeta^2
    let bump_left = one.add(&neg_one.mul(&one_minus_zeta).mul(&one_minus_zeta));
    let bump_right = one.add(&neg_one.mul(&zeta).mul(&zeta));
    [
        one_minus_zeta.mul(&one.add(&nu_h2_sixth.mul(&bump_left))),
        h2_sixth.mul(&one_minus_zeta).mul(&bump_left),
        zeta.mul(&one.add(&nu_h2_sixth.mul(&bump_right))),
        h2_sixth.mul(&zeta).mul(&bump_right),
    ]
}

/// Exact `f_i` and `g_ijk` of the fourth-order scheme as polynomials in `(s, nu)`.
#[derive(Debug, Clone)]
pub struct FourthOrderPolynomials {
    pub f: [CoefficientPolynomial; 4],
    pub g: Vec<CoefficientPolynomial>,
}

impl FourthOrderPolynomials {
    pub fn g(&self, i: usize, j: usize, k: usize) -> &CoefficientPolynomial {
        &self.g[16 * i + 4 * j + k]
    }
}

/// Generated once per process.
pub fn fourth_order_polynomials() -> &'static FourthOrderPolynomials {
    static CELL: OnceLock<FourthOrderPolynomials> = OnceLock::new();
    CELL.get_or_init(|| {
        let basis = basis_polys();
        let f = std::array::from_fn(|i| basis[i].integrate_half_cell());
        let mut g = Vec::with_capacity(64);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    g.push(basis[i].mul(&basis[j]).mul(&basis[k]).integrate_half_cell());
                }
            }
        }
        FourthOrderPolynomials { f, g }
    })
}

/// `f_i` and `g_ijk` of the second-order schemes (linear basis on a half cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderTensors {
    pub f: [f64; 2],
    pub g: [[[f64; 2]; 2]; 2],
}

impl SecondOrderTensors {
    pub fn exact_f() -> [Ratio<i128>; 2] {
        [q(3, 8), q(1, 8)]
    }

    /// `g_ijk` indexed by the number of `1` indices.
    pub fn exact_g() -> [Ratio<i128>; 4] {
        [q(15, 64), q(11, 192), q(5, 192), q(1, 64)]
    }

    pub fn new() -> Self {
        let f = Self::exact_f().map(|c| c.to_f64().unwrap());
        let by_weight = Self::exact_g().map(|c| c.to_f64().unwrap());
        let mut g = [[[0.0; 2]; 2]; 2];
        for (i, gi) in g.iter_mut().enumerate() {
            for (j, gij) in gi.iter_mut().enumerate() {
                for (k, gijk) in gij.iter_mut().enumerate() {
                    *gijk = by_weight[i + j + k];
                }
            }
        }
        Self { f, g }
    }
}

impl Default for SecondOrderTensors {
    fn default() -> Self {
        Self::new()
    }
}

/// `f_i(nu, h_tilde)` and the dense symmetric `g_ijk(nu, h_tilde)`, `i, j, k in 0..4`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourthOrderTensors {
    pub nu: f64,
    pub h_tilde: f64,
    pub f: [f64; 4],
    pub g: [[[f64; 4]; 4]; 4],
}

impl FourthOrderTensors {
    pub fn new(nu: f64, h_tilde: f64) -> Self {
        let polys = fourth_order_polynomials();
        let f = std::array::from_fn(|i| polys.f[i].eval(nu, h_tilde));
        let g = std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| polys.g(i, j, k).eval(nu, h_tilde)))
        });
        Self { nu, h_tilde, f, g }
    }
}

pub fn fourth_order_tensors(nu: f64, h_tilde: f64) -> FourthOrderTensors {
    FourthOrderTensors::new(nu, h_tilde)
}

/// `(F0, F1, F2, F3)` at `zeta`: the cubic basis multiplying
/// `E_left, eps |E_left|^2 E_left, E_right, eps |E_right|^2 E_right`.
pub fn basis_functions_fo(zeta: f64, nu: f64, h_tilde: f64) -> [f64; 4] {
    let c = h_tilde * h_tilde / 6.0;
    let u = 1.0 - zeta;
    let bump_left = 1.0 - u * u;
    let bump_right = 1.0 - zeta * zeta;
    [u * (1.0 + nu * c * bump_left), c * u * bump_left, zeta * (1.0 + nu * c * bump_right), c * zeta * bump_right]
}

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// `int_0^{1/2} F_i F_j F_k dzeta` by 5-point Gauss–Legendre, exact for the
/// degree-9 integrand. Independent of the exact generator.
pub fn tensor_quadrature_oracle(nu: f64, h_tilde: f64, i: usize, j: usize, k: usize) -> f64 {
    GAUSS5_NODES
        .iter()
        .zip(GAUSS5_WEIGHTS)
        .map(|(x, w)| {
            let zeta = 0.25 * (x + 1.0);
            let b = basis_functions_fo(zeta, nu, h_tilde);
            0.25 * w * b[i] * b[j] * b[k]
        })
        .sum()
}

/// Same rule for `int_0^{1/2} F_i dzeta`.
pub fn basis_integral_oracle(nu: f64, h_tilde: f64, i: usize) -> f64 {
    GAUSS5_NODES
        .iter()
        .zip(GAUSS5_WEIGHTS)
        .map(|(x, w)| 0.25 * w * basis_functions_fo(0.25 * (x + 1.0), nu, h_tilde)[i])
        .sum()
}

/// Cubic on a cell of width `h` matching values at both ends and second
/// `z`-derivatives `d2_left`, `d2_right` there, evaluated at `zeta`.
pub fn hermite_birkhoff_interpolate(
    e_left: C64,
    e_right: C64,
    d2_left: C64,
    d2_right: C64,
    zeta: f64,
    h: f64,
) -> C64 {
    let u = 1.0 - zeta;
    let c = h * h / 6.0;
    e_left * u + e_right * zeta - d2_left * (c * u * (1.0 - u * u)) - d2_right * (c * zeta * (1.0 - zeta * zeta))
}

/// Constant-coefficient exterior recurrence `L1 E_{m-1} - 2 L0 E_m + L1 E_{m+1} = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorStencil {
    pub l0: f64,
    pub l1: f64,
    pub scheme: SchemeKind,
}

/// Exterior stencil of `scheme` for the linear medium `nu = 1`.
pub fn exterior_stencil(scheme: SchemeKind, h_tilde: f64) -> Result<ExteriorStencil> {
    exterior_stencil_nu(scheme, 1.0, h_tilde)
}

/// Stencil for a linear homogeneous medium with refractive index squared `nu`.
///
/// The five-node scheme has no three-term recurrence; its propagating root
/// `cos(theta) = 4 - sqrt(9 + 3 nu h_tilde^2)` is returned as the equivalent
/// pair `L1 = h_tilde^-2`, `L0 = cos(theta) h_tilde^-2`.
pub fn exterior_stencil_nu(scheme: SchemeKind, nu: f64, h_tilde: f64) -> Result<ExteriorStencil> {
    if !(h_tilde.is_finite() && h_tilde > 0.0) {
        return Err(NlhError::InvalidGrid(format!("h_tilde must be positive, got {h_tilde}")));
    }
    let inv = 1.0 / (h_tilde * h_tilde);
    let h2 = h_tilde * h_tilde;
    let (l0, l1) = match scheme {
        SchemeKind::Fv2 | SchemeKind::Fv2Alt => (inv - 3.0 * nu / 8.0, inv + nu / 8.0),
        SchemeKind::Fv4 => (
            inv - nu / 3.0 - 3.0 * nu * nu * h2 / 128.0,
            inv + nu / 6.0 + 7.0 * nu * nu * h2 / 384.0,
        ),
        SchemeKind::Fd2 => (inv - nu / 2.0, inv),
        SchemeKind::Fd5 => ((4.0 - (9.0 + 3.0 * nu * h2).sqrt()) * inv, inv),
    };
    if !(l1 > l0.abs()) {
        return Err(NlhError::UnresolvedWave { h_tilde, l0, l1 });
    }
    Ok(ExteriorStencil { l0, l1, scheme })
}

/// One row of the `coeffs` dump: `j`, `k` are `None` for `f_i` rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRow {
    pub i: usize,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub value: f64,
}

/// All `f_i` then all 64 `g_ijk` of the fourth-order scheme at `(nu, h_tilde)`.
pub fn coefficient_table(nu: f64, h_tilde: f64) -> Vec<CoefficientRow> {
    let t = FourthOrderTensors::new(nu, h_tilde);
    let mut rows: Vec<CoefficientRow> =
        (0..4).map(|i| CoefficientRow { i, j: None, k: None, value: t.f[i] }).collect();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                rows.push(CoefficientRow { i, j: Some(j), k: Some(k), value: t.g[i][j][k] });
            }
        }
    }
    rows
}
