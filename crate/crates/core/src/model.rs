//! Continuous problem data (material, wavenumber), the uniform grid and the
//! per-cell material sampling shared by every scheme.

use crate::error::{NlhError, Result};
use crate::C64;

/// Breakpoints closer than this (in units of the grid spacing) to a node are
/// treated as lying on it.
const NODE_ALIGNMENT_TOL: f64 = 1e-9;

/// Piecewise-constant `nu(z)`, `eps(z)` on `[0, z_max]`.
///
/// Layer `l` occupies `(breakpoints[l], breakpoints[l + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialProfile {
    breakpoints: Vec<f64>,
    nu: Vec<f64>,
    eps: Vec<f64>,
}

impl MaterialProfile {
    pub fn new(breakpoints: Vec<f64>, nu: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(NlhError::InvalidProfile("need at least two breakpoints".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(NlhError::InvalidProfile(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if breakpoints.iter().any(|z| !z.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NlhError::InvalidProfile("breakpoints must be finite and strictly increasing".into()));
        }
        let layers = breakpoints.len() - 1;
        if nu.len() != layers || eps.len() != layers {
            return Err(NlhError::InvalidProfile(format!(
                "{} layers need {} nu and eps values, got {} and {}",
                layers,
                layers,
                nu.len(),
                eps.len()
            )));
        }
        if let Some(v) = nu.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(NlhError::InvalidProfile(format!("nu must be positive, got {v}")));
        }
        if let Some(v) = eps.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(NlhError::InvalidProfile(format!("eps must be non-negative, got {v}")));
        }
        Ok(Self { breakpoints, nu, eps })
    }

    /// A single Kerr layer filling `[0, z_max]`.
    pub fn homogeneous(z_max: f64, nu: f64, eps: f64) -> Result<Self> {
        Self::new(vec![0.0, z_max], vec![nu], vec![eps])
    }

    /// Equal-width layers, `(nu, eps)` per layer from left to right.
    pub fn equal_layers(z_max: f64, layers: &[(f64, f64)]) -> Result<Self> {
        if layers.is_empty() {
            return Err(NlhError::InvalidProfile("no layers given".into()));
        }
        let n = layers.len();
        let mut breakpoints: Vec<f64> = (0..n).map(|l| z_max * l as f64 / n as f64).collect();
        breakpoints.push(z_max);
        Self::new(
            breakpoints,
            layers.iter().map(|l| l.0).collect(),
            layers.iter().map(|l| l.1).collect(),
        )
    }

    pub fn z_max(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn nu_values(&self) -> &[f64] {
        &self.nu
    }

    pub fn eps_values(&self) -> &[f64] {
        &self.eps
    }

    pub fn layer_count(&self) -> usize {
        self.nu.len()
    }

    /// Index of the layer containing `z`; points on an interface go to the
    /// layer on their right, `z_max` to the last layer.
    pub fn layer_index(&self, z: f64) -> usize {
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        interior.partition_point(|b| *b <= z)
    }

    /// `(nu, eps)` at `z`, including the linear exterior `(1, 0)`.
    pub fn coefficients_at(&self, z: f64) -> (f64, f64) {
        if z < 0.0 || z > self.z_max() {
            return (1.0, 0.0);
        }
        let l = self.layer_index(z);
        (self.nu[l], self.eps[l])
    }

    /// Same layers with every `eps` multiplied by `factor`.
    pub fn with_eps_scaled(&self, factor: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            nu: self.nu.clone(),
            eps: self.eps.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn is_linear(&self) -> bool {
        self.eps.iter().all(|e| *e == 0.0)
    }
}

/// The continuous problem: wavenumber and material, with unit incoming amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    k0: f64,
    material: MaterialProfile,
}

impl ProblemSpec {
    pub fn new(k0: f64, material: MaterialProfile) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(NlhError::InvalidProblem(format!("k0 must be positive, got {k0}")));
        }
        Ok(Self { k0, material })
    }

    /// Problem driven by an incoming wave of modulus `amplitude`, rescaled to
    /// unit incoming amplitude by absorbing `amplitude^2` into `eps`.
    /// Fields computed for the returned problem are in units of `amplitude`.
    pub fn with_incoming_amplitude(k0: f64, material: MaterialProfile, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(NlhError::InvalidProblem(format!(
                "incoming amplitude must be positive, got {amplitude}"
            )));
        }
        Self::new(k0, material.with_eps_scaled(amplitude * amplitude))
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn z_max(&self) -> f64 {
        self.material.z_max()
    }

    pub fn material(&self) -> &MaterialProfile {
        &self.material
    }

    /// Incoming amplitude; always one after rescaling.
    pub fn e_inc(&self) -> C64 {
        C64::new(1.0, 0.0)
    }

    pub fn with_eps_scaled(&self, factor: f64) -> Self {
        Self { k0: self.k0, material: self.material.with_eps_scaled(factor) }
    }
}

/// Uniform grid `z_m = (m - 1) h`, `m = 1..M`, `h = z_max / (M - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    m_count: usize,
    h: f64,
    h_tilde: f64,
    z_max: f64,
}

impl Grid {
    pub fn m_count(&self) -> usize {
        self.m_count
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Dimensionless spacing `k0 h`.
    pub fn h_tilde(&self) -> f64 {
        self.h_tilde
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Position of the 0-based node `i`.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.m_count {
            self.z_max
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m_count).map(|i| self.node(i)).collect()
    }

    /// Grid whose spacing is closest to `h_tilde / k0` among those that put every
    /// material interface on a node.
    pub fn for_h_tilde(spec: &ProblemSpec, h_tilde: f64) -> Result<Self> {
        if !(h_tilde.is_finite() && h_tilde > 0.0) {
            return Err(NlhError::InvalidGrid(format!("h_tilde must be positive, got {h_tilde}")));
        }
        let target = spec.k0() * spec.z_max() / h_tilde;
        let base = target.round().max(2.0) as usize;
        for offset in 0..=base {
            for cells in [base + offset, base.saturating_sub(offset)] {
                if cells >= 2 && cells_compatible(spec.material(), cells) {
                    return build_grid(spec, cells + 1);
                }
            }
        }
        Err(NlhError::InvalidGrid(format!("no breakpoint-compatible grid near h_tilde = {h_tilde}")))
    }
}

fn cells_compatible(material: &MaterialProfile, cells: usize) -> bool {
    let z_max = material.z_max();
    material.breakpoints()[1..material.breakpoints().len() - 1].iter().all(|b| {
        let pos = b / z_max * cells as f64;
        (pos - pos.round()).abs() <= NODE_ALIGNMENT_TOL
    })
}

/// Uniform grid of `m_count` nodes; every material interface must land on a node.
pub fn build_grid(spec: &ProblemSpec, m_count: usize) -> Result<Grid> {
    if m_count < 3 {
        return Err(NlhError::InvalidGrid(format!("need at least 3 nodes, got {m_count}")));
    }
    let z_max = spec.z_max();
    let cells = m_count - 1;
    let h = z_max / cells as f64;
    let bps = spec.material().breakpoints();
    for b in &bps[1..bps.len() - 1] {
        let pos = b / z_max * cells as f64;
        if (pos - pos.round()).abs() > NODE_ALIGNMENT_TOL {
            return Err(NlhError::BreakpointOffGrid { z: *b, h });
        }
    }
    Ok(Grid { m_count, h, h_tilde: spec.k0() * h, z_max })
}

/// Cell-wise material values, ghost cells included.
///
/// Index `c` refers to the cell between 0-based nodes `c - 1` and `c`; cell 0 is
/// the left exterior and cell `M` the right exterior. Node `i` therefore sits
/// between cells `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMaterial {
    pub nu: Vec<f64>,
    pub eps: Vec<f64>,
}

impl CellMaterial {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn with_eps_scaled(&self, factor: f64) -> Self {
        Self { nu: self.nu.clone(), eps: self.eps.iter().map(|e| e * factor).collect() }
    }
}

/// Per-cell `(nu, eps)`; each interior cell takes the layer containing its midpoint.
pub fn sample_cells(spec: &ProblemSpec, grid: &Grid) -> CellMaterial {
    let m = grid.m_count();
    let mut nu = Vec::with_capacity(m + 1);
    let mut eps = Vec::with_capacity(m + 1);
    nu.push(1.0);
    eps.push(0.0);
    for c in 1..m {
        let mid = (c as f64 - 0.5) * grid.h();
        let l = spec.material().layer_index(mid);
        nu.push(spec.material().nu_values()[l]);
        eps.push(spec.material().eps_values()[l]);
    }
    nu.push(1.0);
    eps.push(0.0);
    CellMaterial { nu, eps }
}

/// Nodal field values `E_1..E_M`, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    values: Vec<C64>,
}

impl DiscreteField {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(NlhError::NonFiniteField { index });
        }
        Ok(Self { values })
    }

    pub fn zeros(m_count: usize) -> Self {
        Self { values: vec![C64::new(0.0, 0.0); m_count] }
    }

    /// Samples of `f` at the grid nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::new(grid.nodes().into_iter().map(f).collect())
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
