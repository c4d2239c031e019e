//! Linear references: the two-half-space step medium (continuous and discrete)
//! and the transfer-matrix solution of a layered linear slab.

use crate::coefficients::exterior_stencil_nu;
use crate::error::{NlhError, Result};
use crate::model::ProblemSpec;
use crate::schemes::{characteristic_root, SchemeKind};
use crate::C64;

/// Reflection and transmission at a single interface at `z = 0` between
/// half-spaces with `nu_left` and `nu_right`, for a unit wave incident from the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearStepSolution {
    pub r: C64,
    pub t: C64,
    pub nu_left: f64,
    pub nu_right: f64,
    pub k0: f64,
}

impl LinearStepSolution {
    pub fn new(nu_left: f64, nu_right: f64, k0: f64) -> Result<Self> {
        if !(nu_left > 0.0 && nu_right > 0.0 && k0 > 0.0) {
            return Err(NlhError::InvalidProblem("step medium needs positive nu and k0".into()));
        }
        let n = (nu_right / nu_left).sqrt();
        Ok(Self { r: C64::new((1.0 - n) / (1.0 + n), 0.0), t: C64::new(2.0 / (1.0 + n), 0.0), nu_left, nu_right, k0 })
    }

    pub fn field_at(&self, z: f64) -> C64 {
        if z < 0.0 {
            let k = self.k0 * self.nu_left.sqrt();
            C64::from_polar(1.0, k * z) + self.r * C64::from_polar(1.0, -k * z)
        } else {
            self.t * C64::from_polar(1.0, self.k0 * self.nu_right.sqrt() * z)
        }
    }
}

/// Closed-form step solution and its samples at `z_grid`.
pub fn linear_step_closed_form(nu_left: f64, nu_right: f64, k0: f64, z_grid: &[f64]) -> Result<(Vec<C64>, LinearStepSolution)> {
    let sol = LinearStepSolution::new(nu_left, nu_right, k0)?;
    Ok((z_grid.iter().map(|z| sol.field_at(*z)).collect(), sol))
}

/// Exact solution of a three-node scheme on the unbounded step medium: node 0
/// at the interface, `q_left^m + R q_left^-m` for `m <= 0`, `T q_right^m` for `m >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStepSolution {
    pub r: C64,
    pub t: C64,
    pub q_left: C64,
    pub q_right: C64,
    /// `(m, E_m)` over the requested index range.
    pub samples: Vec<(i64, C64)>,
}

impl DiscreteStepSolution {
    pub fn value(&self, m: i64) -> C64 {
        if m <= 0 {
            self.q_left.powi(m as i32) + self.r * self.q_left.powi(-m as i32)
        } else {
            self.t * self.q_right.powi(m as i32)
        }
    }
}

/// Solves the interface relations `1 + R = T` and the node equation at the
/// interface, where each half cell contributes `L1(nu) E_neighbour - L0(nu) E_0`.
pub fn linear_step_discrete_solution(
    scheme: SchemeKind,
    nu_left: f64,
    nu_right: f64,
    h_tilde: f64,
    m_range: (i64, i64),
) -> Result<DiscreteStepSolution> {
    if scheme == SchemeKind::Fd5 {
        return Err(NlhError::InvalidConfig("the step solution is defined for three-node schemes".into()));
    }
    let left = exterior_stencil_nu(scheme, nu_left, h_tilde)?;
    let right = exterior_stencil_nu(scheme, nu_right, h_tilde)?;
    let ql = characteristic_root(&left)?;
    let qr = characteristic_root(&right)?;
    let t = (ql - ql.inv()) * left.l1 / (ql * left.l1 + qr * right.l1 - (left.l0 + right.l0));
    let r = t - 1.0;
    let mut sol = DiscreteStepSolution { r, t, q_left: ql, q_right: qr, samples: Vec::new() };
    sol.samples = (m_range.0..=m_range.1).map(|m| (m, sol.value(m))).collect();
    Ok(sol)
}

/// Exact continuum solution of a linear layered slab (every `eps` must be zero),
/// sampled at `z`, with `(R, T)`.
pub fn transfer_matrix_solution(spec: &ProblemSpec, z: &[f64]) -> Result<(Vec<C64>, C64, C64)> {
    let mat = spec.material();
    if !mat.is_linear() {
        return Err(NlhError::InvalidProblem("transfer-matrix solution needs eps = 0".into()));
    }
    let k0 = spec.k0();
    let bps = mat.breakpoints();
    let z_max = spec.z_max();
    let i = C64::new(0.0, 1.0);
    // Unit transmitted amplitude; rescale at the end.
    let e_end = C64::from_polar(1.0, k0 * z_max);
    let mut states = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); bps.len()];
    states[bps.len() - 1] = (e_end, i * k0 * e_end);
    for l in (0..mat.layer_count()).rev() {
        let k = k0 * mat.nu_values()[l].sqrt();
        let (e, de) = states[l + 1];
        let d = bps[l] - bps[l + 1];
        states[l] = (e * (k * d).cos() + de * ((k * d).sin() / k), -e * (k * (k * d).sin()) + de * (k * d).cos());
    }
    let (e0, de0) = states[0];
    let a = (e0 + de0 / (i * k0)) * 0.5;
    let t = a.inv();
    let r = e0 / a - 1.0;
    let samples = z
        .iter()
        .map(|&zz| {
            if zz <= 0.0 {
                return C64::from_polar(1.0, k0 * zz) + r * C64::from_polar(1.0, -k0 * zz);
            }
            if zz >= z_max {
                return t * C64::from_polar(1.0, k0 * zz);
            }
            let l = mat.layer_index(zz);
            let k = k0 * mat.nu_values()[l].sqrt();
            let (e, de) = states[l + 1];
            let d = zz - bps[l + 1];
            (e * (k * d).cos() + de * ((k * d).sin() / k)) / a
        })
        .collect();
    Ok((samples, r, t))
}
