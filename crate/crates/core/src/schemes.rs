//! Discrete residual operators and the ghost-node boundary closure.
//!
//! Every residual is normalised as `F_m / k0^2`, so that in the linear exterior
//! it reads `L1 E_{m-1} - 2 L0 E_m + L1 E_{m+1}`. The three-node schemes are
//! written as a sum of two half-cell contributions per node: the half cell
//! adjacent to node `m` inside cell `c` contributes `H_c(E_m, E_neighbour)`.

use std::fmt;
use std::str::FromStr;

use crate::coefficients::{exterior_stencil, ExteriorStencil, FourthOrderTensors, SecondOrderTensors};
use crate::error::{NlhError, Result};
use crate::model::{sample_cells, CellMaterial, Grid, ProblemSpec};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Second-order finite volume, trapezoid-like quadrature of the cubic term.
    Fv2,
    /// Second-order finite volume with the cubic term integrated exactly.
    Fv2Alt,
    /// Fourth-order compact finite volume.
    Fv4,
    /// Central differences, second order.
    Fd2,
    /// Central differences on five nodes, fourth order in smooth media.
    Fd5,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] =
        [SchemeKind::Fv2, SchemeKind::Fv2Alt, SchemeKind::Fv4, SchemeKind::Fd2, SchemeKind::Fd5];

    /// Nodes on each side of the centre that the stencil touches.
    pub fn half_width(self) -> usize {
        match self {
            SchemeKind::Fd5 => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Fv2 => "fv2",
            SchemeKind::Fv2Alt => "fv2alt",
            SchemeKind::Fv4 => "fv4",
            SchemeKind::Fd2 => "fd2",
            SchemeKind::Fd5 => "fd5",
        }
    }

    /// Order of accuracy on smooth data.
    pub fn design_order(self) -> u32 {
        match self {
            SchemeKind::Fv4 | SchemeKind::Fd5 => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = NlhError;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| NlhError::InvalidConfig(format!("unknown scheme '{s}' (expected fv2, fv2alt, fv4, fd2, fd5)")))
    }
}

/// Unit-modulus root `q` of the exterior recurrence and the resulting ghost
/// relations `E_0 = ghost_left_const + ghost_left_coef E_1`, `E_{M+1} = ghost_right_coef E_M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryClosure {
    pub q: C64,
    pub ghost_left_const: C64,
    pub ghost_left_coef: C64,
    pub ghost_right_coef: C64,
    pub e_inc: C64,
}

impl BoundaryClosure {
    pub fn new(stencil: &ExteriorStencil, e_inc: C64) -> Result<Self> {
        let q = characteristic_root(stencil)?;
        Ok(Self { q, ghost_left_const: (q.inv() - q) * e_inc, ghost_left_coef: q, ghost_right_coef: q, e_inc })
    }

    /// Ghost values `k` layers outside each end (`k >= 1`):
    /// `E_{1-k} = (q^-k - q^k) E_inc + q^k E_1` and `E_{M+k} = q^k E_M`.
    pub fn ghosts(&self, layer: u32, e_first: C64, e_last: C64) -> (C64, C64) {
        let qk = self.q.powu(layer);
        ((qk.inv() - qk) * self.e_inc + qk * e_first, qk * e_last)
    }

    /// Injection constant of the `k`-th left ghost layer.
    pub fn left_const(&self, layer: u32) -> C64 {
        let qk = self.q.powu(layer);
        (qk.inv() - qk) * self.e_inc
    }
}

/// `q = L0/L1 + i sqrt(1 - (L0/L1)^2)`.
pub fn characteristic_root(stencil: &ExteriorStencil) -> Result<C64> {
    if !(stencil.l1 > stencil.l0.abs()) {
        return Err(NlhError::UnresolvedWave { h_tilde: f64::NAN, l0: stencil.l0, l1: stencil.l1 });
    }
    let c = stencil.l0 / stencil.l1;
    Ok(C64::new(c, (1.0 - c * c).sqrt()))
}

/// First-layer ghost values for a field under `closure`.
pub fn apply_boundary_closure(closure: &BoundaryClosure, field: &[C64]) -> (C64, C64) {
    let first = field.first().copied().unwrap_or_default();
    let last = field.last().copied().unwrap_or_default();
    (closure.ghost_left_const + closure.ghost_left_coef * first, closure.ghost_right_coef * last)
}

/// Cubic term `|e|^2 e`.
#[inline]
pub fn cubic(e: C64) -> C64 {
    e * e.norm_sqr()
}

/// Per-cell data needed by a half-cell kernel.
#[derive(Debug, Clone, Copy)]
pub struct CellView<'a> {
    pub nu: f64,
    pub eps: f64,
    pub fo: Option<&'a FourthOrderTensors>,
}

/// `A_i = sum_jk g_ijk v_j v_k` for a dense symmetric tensor.
pub fn contract_pair<const N: usize>(g: &[[[f64; N]; N]; N], v: &[C64; N]) -> [C64; N] {
    std::array::from_fn(|i| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..N {
            let mut inner = C64::new(0.0, 0.0);
            for k in 0..N {
                inner += v[k] * g[i][j][k];
            }
            acc += v[j] * inner;
        }
        acc
    })
}

/// `B_k = sum_ij g_ijk conj(v_i) v_j`.
pub fn contract_conj_pair<const N: usize>(g: &[[[f64; N]; N]; N], v: &[C64; N]) -> [C64; N] {
    std::array::from_fn(|k| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..N {
            let mut inner = C64::new(0.0, 0.0);
            for j in 0..N {
                inner += v[j] * g[i][j][k];
            }
            acc += v[i].conj() * inner;
        }
        acc
    })
}

/// `v = (a, eps |a|^2 a, b, eps |b|^2 b)` of the fourth-order half cell.
pub fn fo_vector(eps: f64, a: C64, b: C64) -> [C64; 4] {
    [a, cubic(a) * eps, b, cubic(b) * eps]
}

/// Contribution of one half cell to the residual at the node holding `a`;
/// `b` is the value at the cell's other end.
pub fn half_cell(scheme: SchemeKind, cell: CellView<'_>, so: &SecondOrderTensors, h_tilde: f64, a: C64, b: C64) -> C64 {
    let inv = 1.0 / (h_tilde * h_tilde);
    let (nu, eps) = (cell.nu, cell.eps);
    match scheme {
        SchemeKind::Fv2 => {
            (b - a) * inv + (a * 3.0 + b) * (nu / 8.0) + (cubic(a) * 3.0 + cubic(b)) * (eps / 8.0)
        }
        SchemeKind::Fv2Alt => {
            let linear = (b - a) * inv + (a * so.f[0] + b * so.f[1]) * nu;
            if eps == 0.0 {
                return linear;
            }
            let w = [a, b];
            let pair = contract_pair(&so.g, &w);
            linear + (w[0].conj() * pair[0] + w[1].conj() * pair[1]) * eps
        }
        SchemeKind::Fv4 => {
            let t = cell.fo.expect("fourth-order tensors missing for cell");
            let flux = (b - a) * ((1.0 + nu * h_tilde * h_tilde / 24.0) * inv) + (cubic(b) - cubic(a)) * (eps / 24.0);
            let v = fo_vector(eps, a, b);
            let lin = (v[0] * t.f[0] + v[1] * t.f[1] + v[2] * t.f[2] + v[3] * t.f[3]) * nu;
            if eps == 0.0 {
                return flux + lin;
            }
            let pair = contract_pair(&t.g, &v);
            let cub: C64 = (0..4).map(|i| v[i].conj() * pair[i]).sum();
            flux + lin + cub * eps
        }
        SchemeKind::Fd2 => (b - a) * inv + (a * nu + cubic(a) * eps) * 0.5,
        SchemeKind::Fd5 => unreachable!("five-node scheme has no half-cell form"),
    }
}

/// A scheme bound to a grid and sampled material, with closure and tensors cached.
#[derive(Debug, Clone)]
pub struct Discretization {
    scheme: SchemeKind,
    k0: f64,
    grid: Grid,
    cells: CellMaterial,
    stencil: ExteriorStencil,
    closure: BoundaryClosure,
    so: SecondOrderTensors,
    fo_cache: Vec<FourthOrderTensors>,
    fo_index: Vec<usize>,
}

impl Discretization {
    pub fn new(scheme: SchemeKind, spec: &ProblemSpec, grid: &Grid) -> Result<Self> {
        Self::with_cells(scheme, spec, grid, sample_cells(spec, grid))
    }

    pub fn with_cells(scheme: SchemeKind, spec: &ProblemSpec, grid: &Grid, cells: CellMaterial) -> Result<Self> {
        if cells.len() != grid.m_count() + 1 {
            return Err(NlhError::LengthMismatch { expected: grid.m_count() + 1, got: cells.len() });
        }
        let stencil = exterior_stencil(scheme, grid.h_tilde())?;
        let closure = BoundaryClosure::new(&stencil, spec.e_inc())?;
        let mut fo_cache: Vec<FourthOrderTensors> = Vec::new();
        let mut fo_index = Vec::new();
        if scheme == SchemeKind::Fv4 {
            for &nu in &cells.nu {
                let idx = match fo_cache.iter().position(|t| t.nu.to_bits() == nu.to_bits()) {
                    Some(i) => i,
                    None => {
                        fo_cache.push(FourthOrderTensors::new(nu, grid.h_tilde()));
                        fo_cache.len() - 1
                    }
                };
                fo_index.push(idx);
            }
        }
        Ok(Self {
            scheme,
            k0: spec.k0(),
            grid: *grid,
            cells,
            stencil,
            closure,
            so: SecondOrderTensors::new(),
            fo_cache,
            fo_index,
        })
    }

    /// Same operator with every cell's `eps` multiplied by `factor`; tensors depend
    /// only on `nu` and are reused.
    pub fn with_eps_scaled(&self, factor: f64) -> Self {
        Self { cells: self.cells.with_eps_scaled(factor), ..self.clone() }
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn cells(&self) -> &CellMaterial {
        &self.cells
    }

    pub fn stencil(&self) -> &ExteriorStencil {
        &self.stencil
    }

    pub fn closure(&self) -> &BoundaryClosure {
        &self.closure
    }

    pub fn second_order_tensors(&self) -> &SecondOrderTensors {
        &self.so
    }

    pub fn m_count(&self) -> usize {
        self.grid.m_count()
    }

    pub fn cell(&self, c: usize) -> CellView<'_> {
        CellView {
            nu: self.cells.nu[c],
            eps: self.cells.eps[c],
            fo: self.fo_index.get(c).map(|&i| &self.fo_cache[i]),
        }
    }

    pub fn check_field(&self, field: &[C64]) -> Result<()> {
        if field.len() != self.m_count() {
            return Err(NlhError::LengthMismatch { expected: self.m_count(), got: field.len() });
        }
        if let Some(index) = field.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(NlhError::NonFiniteField { index });
        }
        Ok(())
    }

    /// Field padded with `half_width` ghost values on each side.
    pub fn extended(&self, field: &[C64]) -> Vec<C64> {
        let p = self.scheme.half_width();
        let m = field.len();
        let mut ext = Vec::with_capacity(m + 2 * p);
        for layer in (1..=p as u32).rev() {
            ext.push(self.closure.ghosts(layer, field[0], field[m - 1]).0);
        }
        ext.extend_from_slice(field);
        for layer in 1..=p as u32 {
            ext.push(self.closure.ghosts(layer, field[0], field[m - 1]).1);
        }
        ext
    }

    /// Residual at 0-based node `i` given the padded field.
    fn node_residual(&self, ext: &[C64], i: usize) -> C64 {
        let h_tilde = self.grid.h_tilde();
        let p = self.scheme.half_width();
        let e = |offset: isize| ext[((i + p) as isize + offset) as usize];
        match self.scheme {
            SchemeKind::Fd5 => {
                let inv = 1.0 / (12.0 * h_tilde * h_tilde);
                let nu = 0.5 * (self.cells.nu[i] + self.cells.nu[i + 1]);
                let eps = 0.5 * (self.cells.eps[i] + self.cells.eps[i + 1]);
                let centre = e(0);
                (-e(-2) + e(-1) * 16.0 - centre * 30.0 + e(1) * 16.0 - e(2)) * inv + centre * nu + cubic(centre) * eps
            }
            s => {
                half_cell(s, self.cell(i), &self.so, h_tilde, e(0), e(-1))
                    + half_cell(s, self.cell(i + 1), &self.so, h_tilde, e(0), e(1))
            }
        }
    }

    /// `F(E)` at all `M` nodes.
    pub fn residual(&self, field: &[C64]) -> Result<Vec<C64>> {
        self.check_field(field)?;
        let ext = self.extended(field);
        let out: Vec<C64> = (0..self.m_count()).map(|i| self.node_residual(&ext, i)).collect();
        if let Some(index) = out.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(NlhError::NonFiniteField { index });
        }
        Ok(out)
    }

    pub fn residual_norm(&self, field: &[C64]) -> Result<f64> {
        Ok(max_norm(&self.residual(field)?))
    }

    /// `R = E_1 - E_inc`, `T = E_M exp(-i k0 z_max)`.
    pub fn extract_rt(&self, field: &[C64]) -> (C64, C64) {
        extract_rt(self.k0, self.grid.z_max(), field)
    }
}

pub fn extract_rt(k0: f64, z_max: f64, field: &[C64]) -> (C64, C64) {
    let r = field[0] - C64::new(1.0, 0.0);
    let t = field[field.len() - 1] * C64::from_polar(1.0, -k0 * z_max);
    (r, t)
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

/// Residual of `scheme` for `field` on `grid` with the given cell material.
pub fn residual(scheme: SchemeKind, spec: &ProblemSpec, grid: &Grid, cells: &CellMaterial, field: &[C64]) -> Result<Vec<C64>> {
    Discretization::with_cells(scheme, spec, grid, cells.clone())?.residual(field)
}

/// Fourth-order residual at the interior node between cells `m` and `m + 1`.
pub fn interior_kernel_fv4(cells: &CellMaterial, h_tilde: f64, e_prev: C64, e_mid: C64, e_next: C64, m: usize) -> C64 {
    let so = SecondOrderTensors::new();
    let left_t = FourthOrderTensors::new(cells.nu[m], h_tilde);
    let right_t = FourthOrderTensors::new(cells.nu[m + 1], h_tilde);
    let left = CellView { nu: cells.nu[m], eps: cells.eps[m], fo: Some(&left_t) };
    let right = CellView { nu: cells.nu[m + 1], eps: cells.eps[m + 1], fo: Some(&right_t) };
    half_cell(SchemeKind::Fv4, left, &so, h_tilde, e_mid, e_prev)
        + half_cell(SchemeKind::Fv4, right, &so, h_tilde, e_mid, e_next)
}
