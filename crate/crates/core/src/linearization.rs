//! Jacobians `J1 = dF/dE`, `J2 = dF/dE*`, their real 2x2-block lift, and the
//! block-banded direct solver.

use crate::error::{NlhError, Result};
use crate::schemes::{contract_conj_pair, contract_pair, fo_vector, CellView, Discretization, SchemeKind};
use crate::C64;

/// Real 2x2 block, row-major.
pub type Block = [[f64; 2]; 2];

const ZERO_BLOCK: Block = [[0.0; 2]; 2];

/// Multiplication by `c` acting on `(Re x, Im x)`.
pub fn complex_to_real_block(c: C64) -> Block {
    [[c.re, -c.im], [c.im, c.re]]
}

/// Block acting on `(Re x, Im x)` as `x -> j1 x + j2 conj(x)`.
pub fn lift_pair(j1: C64, j2: C64) -> Block {
    [[j1.re + j2.re, -j1.im + j2.im], [j1.im + j2.im, j1.re - j2.re]]
}

/// `(d/dE, d/dE*)` of `|E|^2 E`.
pub fn scalar_cubic_derivatives(e: C64) -> (C64, C64) {
    (C64::new(2.0 * e.norm_sqr(), 0.0), e * e)
}

/// Derivatives of `S = sum g_ijk conj(w_i) w_j w_k` with respect to `w_q` and
/// `conj(w_q)` for every `q`, returned as `(dS/dw, dS/dw*)`.
pub fn tensor_cubic_derivatives<const N: usize>(g: &[[[f64; N]; N]; N], w: &[C64; N]) -> ([C64; N], [C64; N]) {
    let a = contract_pair(g, w);
    let b = contract_conj_pair(g, w);
    (b.map(|x| x * 2.0), a)
}

/// Partial derivatives of one half-cell contribution `H(a, b)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HalfCellDerivatives {
    pub da: C64,
    pub da_conj: C64,
    pub db: C64,
    pub db_conj: C64,
}

/// Exact derivatives of [`crate::schemes::half_cell`].
pub fn half_cell_derivatives(
    scheme: SchemeKind,
    cell: CellView<'_>,
    so: &crate::coefficients::SecondOrderTensors,
    h_tilde: f64,
    a: C64,
    b: C64,
) -> HalfCellDerivatives {
    let inv = 1.0 / (h_tilde * h_tilde);
    let (nu, eps) = (cell.nu, cell.eps);
    let re = |x: f64| C64::new(x, 0.0);
    match scheme {
        SchemeKind::Fv2 => {
            let (ja, ja2) = scalar_cubic_derivatives(a);
            let (jb, jb2) = scalar_cubic_derivatives(b);
            HalfCellDerivatives {
                da: re(-inv + 3.0 * nu / 8.0) + ja * (3.0 * eps / 8.0),
                da_conj: ja2 * (3.0 * eps / 8.0),
                db: re(inv + nu / 8.0) + jb * (eps / 8.0),
                db_conj: jb2 * (eps / 8.0),
            }
        }
        SchemeKind::Fv2Alt => {
            let (d, dc) = tensor_cubic_derivatives(&so.g, &[a, b]);
            HalfCellDerivatives {
                da: re(-inv + nu * so.f[0]) + d[0] * eps,
                da_conj: dc[0] * eps,
                db: re(inv + nu * so.f[1]) + d[1] * eps,
                db_conj: dc[1] * eps,
            }
        }
        SchemeKind::Fv4 => {
            let t = cell.fo.expect("fourth-order tensors missing for cell");
            let flux = (1.0 + nu * h_tilde * h_tilde / 24.0) * inv;
            let (ja, ja2) = scalar_cubic_derivatives(a);
            let (jb, jb2) = scalar_cubic_derivatives(b);
            let mut out = HalfCellDerivatives {
                da: re(-flux) - ja * (eps / 24.0) + (re(t.f[0]) + ja * (eps * t.f[1])) * nu,
                da_conj: -ja2 * (eps / 24.0) + ja2 * (eps * t.f[1] * nu),
                db: re(flux) + jb * (eps / 24.0) + (re(t.f[2]) + jb * (eps * t.f[3])) * nu,
                db_conj: jb2 * (eps / 24.0) + jb2 * (eps * t.f[3] * nu),
            };
            if eps != 0.0 {
                // v = (a, eps c(a), b, eps c(b)); chain rule through v and conj(v).
                let (d, dc) = tensor_cubic_derivatives(&t.g, &fo_vector(eps, a, b));
                out.da += (d[0] + d[1] * ja * eps + dc[1] * ja2.conj() * eps) * eps;
                out.da_conj += (dc[0] + dc[1] * ja * eps + d[1] * ja2 * eps) * eps;
                out.db += (d[2] + d[3] * jb * eps + dc[3] * jb2.conj() * eps) * eps;
                out.db_conj += (dc[2] + dc[3] * jb * eps + d[3] * jb2 * eps) * eps;
            }
            out
        }
        SchemeKind::Fd2 => {
            let (ja, ja2) = scalar_cubic_derivatives(a);
            HalfCellDerivatives {
                da: re(-inv + 0.5 * nu) + ja * (0.5 * eps),
                da_conj: ja2 * (0.5 * eps),
                db: re(inv),
                db_conj: C64::new(0.0, 0.0),
            }
        }
        SchemeKind::Fd5 => unreachable!("five-node scheme has no half-cell form"),
    }
}

/// Coefficients `(alpha, beta)` of the half cell with the intensity frozen at
/// `(a_old, b_old)`, so that the frozen contribution is `alpha a + beta b`.
/// At `(a, b) = (a_old, b_old)` it reproduces the full half-cell value.
pub fn frozen_half_cell(
    scheme: SchemeKind,
    cell: CellView<'_>,
    so: &crate::coefficients::SecondOrderTensors,
    h_tilde: f64,
    a_old: C64,
    b_old: C64,
) -> (C64, C64) {
    let inv = 1.0 / (h_tilde * h_tilde);
    let (nu, eps) = (cell.nu, cell.eps);
    let (ia, ib) = (a_old.norm_sqr(), b_old.norm_sqr());
    let re = |x: f64| C64::new(x, 0.0);
    match scheme {
        SchemeKind::Fv2 => (re(-inv + 3.0 * (nu + eps * ia) / 8.0), re(inv + (nu + eps * ib) / 8.0)),
        SchemeKind::Fv2Alt => {
            let b = contract_conj_pair(&so.g, &[a_old, b_old]);
            (re(-inv + nu * so.f[0]) + b[0] * eps, re(inv + nu * so.f[1]) + b[1] * eps)
        }
        SchemeKind::Fv4 => {
            let t = cell.fo.expect("fourth-order tensors missing for cell");
            let flux = (1.0 + nu * h_tilde * h_tilde / 24.0) * inv;
            let mut alpha = re(-flux - eps * ia / 24.0 + nu * (t.f[0] + t.f[1] * eps * ia));
            let mut beta = re(flux + eps * ib / 24.0 + nu * (t.f[2] + t.f[3] * eps * ib));
            if eps != 0.0 {
                let b = contract_conj_pair(&t.g, &fo_vector(eps, a_old, b_old));
                alpha += (b[0] + b[1] * (eps * ia)) * eps;
                beta += (b[2] + b[3] * (eps * ib)) * eps;
            }
            (alpha, beta)
        }
        SchemeKind::Fd2 => (re(-inv + 0.5 * (nu + eps * ia)), re(inv)),
        SchemeKind::Fd5 => unreachable!("five-node scheme has no half-cell form"),
    }
}

/// Banded complex matrices `J1`, `J2`; row `i` stores columns `i - p ..= i + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexJacobianPair {
    pub bandwidth: usize,
    pub j1: Vec<Vec<C64>>,
    pub j2: Vec<Vec<C64>>,
}

impl ComplexJacobianPair {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let row = vec![C64::new(0.0, 0.0); 2 * bandwidth + 1];
        Self { bandwidth, j1: vec![row.clone(); n], j2: vec![row; n] }
    }

    pub fn n(&self) -> usize {
        self.j1.len()
    }

    /// `J1 x + J2 conj(x)`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let p = self.bandwidth as isize;
        let n = self.n() as isize;
        (0..n)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                for d in -p..=p {
                    let j = i + d;
                    if j >= 0 && j < n {
                        let k = (d + p) as usize;
                        acc += self.j1[i as usize][k] * x[j as usize] + self.j2[i as usize][k] * x[j as usize].conj();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn to_real(&self) -> BlockBandedJacobian {
        let blocks = self
            .j1
            .iter()
            .zip(&self.j2)
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(a, b)| lift_pair(*a, *b)).collect())
            .collect();
        BlockBandedJacobian { bandwidth: self.bandwidth, blocks }
    }
}

/// Real `2M x 2M` matrix of 2x2 blocks with block bandwidth `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBandedJacobian {
    pub bandwidth: usize,
    /// `blocks[i][d + p]` is the block at `(i, i + d)`.
    pub blocks: Vec<Vec<Block>>,
}

pub type BlockTridiagonalJacobian = BlockBandedJacobian;

fn mat_vec(b: &Block, x: [f64; 2]) -> [f64; 2] {
    [b[0][0] * x[0] + b[0][1] * x[1], b[1][0] * x[0] + b[1][1] * x[1]]
}

fn mat_mul(a: &Block, b: &Block) -> Block {
    let mut out = ZERO_BLOCK;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_sub_assign(a: &mut Block, b: &Block) {
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] -= b[i][j];
        }
    }
}

impl BlockBandedJacobian {
    pub fn identity(n: usize, bandwidth: usize) -> Self {
        let mut blocks = vec![vec![ZERO_BLOCK; 2 * bandwidth + 1]; n];
        for row in &mut blocks {
            row[bandwidth] = [[1.0, 0.0], [0.0, 1.0]];
        }
        Self { bandwidth, blocks }
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Block {
        let d = j as isize - i as isize;
        let p = self.bandwidth as isize;
        if d.abs() > p {
            ZERO_BLOCK
        } else {
            self.blocks[i][(d + p) as usize]
        }
    }

    pub fn apply(&self, x: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = self.n() as isize;
        let p = self.bandwidth as isize;
        (0..n)
            .map(|i| {
                let mut acc = [0.0; 2];
                for d in -p..=p {
                    let j = i + d;
                    if j >= 0 && j < n {
                        let y = mat_vec(&self.blocks[i as usize][(d + p) as usize], x[j as usize]);
                        acc[0] += y[0];
                        acc[1] += y[1];
                    }
                }
                acc
            })
            .collect()
    }

    /// Dense `2n x 2n` copy, for testing and small problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut out = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in i.saturating_sub(self.bandwidth)..(i + self.bandwidth + 1).min(n) {
                let b = self.get(i, j);
                for r in 0..2 {
                    for c in 0..2 {
                        out[2 * i + r][2 * j + c] = b[r][c];
                    }
                }
            }
        }
        out
    }

    pub fn factorize(&self) -> Result<BlockBandedLu> {
        let n = self.n();
        let p = self.bandwidth;
        let mut a = self.blocks.clone();
        let mut pivots_inv = Vec::with_capacity(n);
        for k in 0..n {
            let piv = a[k][p];
            let scale = a[k].iter().flat_map(|b| b.iter().flatten()).fold(0.0f64, |m, v| m.max(v.abs()));
            let det = piv[0][0] * piv[1][1] - piv[0][1] * piv[1][0];
            if !(det.abs() > 1e-14 * scale * scale) {
                return Err(NlhError::SingularJacobian { block: k, det });
            }
            let inv = [[piv[1][1] / det, -piv[0][1] / det], [-piv[1][0] / det, piv[0][0] / det]];
            for i in k + 1..(k + p + 1).min(n) {
                // a[i][k] sits at offset k - i
                let l = mat_mul(&a[i][k + p - i], &inv);
                a[i][k + p - i] = l;
                for j in k + 1..(k + p + 1).min(n) {
                    let upd = mat_mul(&l, &a[k][j + p - k]);
                    mat_sub_assign(&mut a[i][j + p - i], &upd);
                }
            }
            pivots_inv.push(inv);
        }
        Ok(BlockBandedLu { bandwidth: p, factors: a, pivots_inv })
    }

    /// Solves `J x = rhs` with one step of iterative refinement.
    pub fn solve(&self, rhs: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
        if rhs.len() != self.n() {
            return Err(NlhError::LengthMismatch { expected: self.n(), got: rhs.len() });
        }
        let lu = self.factorize()?;
        let mut x = lu.solve(rhs);
        let ax = self.apply(&x);
        let r: Vec<[f64; 2]> = rhs.iter().zip(&ax).map(|(b, y)| [b[0] - y[0], b[1] - y[1]]).collect();
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            xi[0] += di[0];
            xi[1] += di[1];
        }
        Ok(x)
    }
}

/// In-place block LU factors: unit-lower multipliers below the diagonal, `U` on and above.
#[derive(Debug, Clone)]
pub struct BlockBandedLu {
    bandwidth: usize,
    factors: Vec<Vec<Block>>,
    pivots_inv: Vec<Block>,
}

impl BlockBandedLu {
    pub fn solve(&self, rhs: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = self.factors.len();
        let p = self.bandwidth;
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in i.saturating_sub(p)..i {
                let t = mat_vec(&self.factors[i][k + p - i], y[k]);
                y[i][0] -= t[0];
                y[i][1] -= t[1];
            }
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..(i + p + 1).min(n) {
                let t = mat_vec(&self.factors[i][j + p - i], y[j]);
                acc[0] -= t[0];
                acc[1] -= t[1];
            }
            y[i] = mat_vec(&self.pivots_inv[i], acc);
        }
        y
    }
}

pub fn block_banded_solve(jacobian: &BlockBandedJacobian, rhs: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    jacobian.solve(rhs)
}

pub fn block_tridiagonal_solve(jacobian: &BlockBandedJacobian, rhs: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    jacobian.solve(rhs)
}

/// `(Re x, Im x)` pairs.
pub fn to_real(x: &[C64]) -> Vec<[f64; 2]> {
    x.iter().map(|c| [c.re, c.im]).collect()
}

pub fn from_real(x: &[[f64; 2]]) -> Vec<C64> {
    x.iter().map(|v| C64::new(v[0], v[1])).collect()
}

/// Which operator [`assemble_pair`] builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearization {
    /// Exact Frechet derivative of the residual.
    Newton,
    /// Residual operator with `|E|^2` frozen at the given field (`J2 = 0`).
    Frozen,
}

/// Complex Jacobian pair of `disc` at `field`, ghost couplings folded into the
/// boundary rows.
pub fn assemble_pair(disc: &Discretization, field: &[C64], kind: Linearization) -> Result<ComplexJacobianPair> {
    disc.check_field(field)?;
    let scheme = disc.scheme();
    let m = disc.m_count();
    let p = scheme.half_width();
    let h_tilde = disc.grid().h_tilde();
    let q = disc.closure().q;
    let ext = disc.extended(field);
    let mut jac = ComplexJacobianPair::zeros(m, p);
    let zero = C64::new(0.0, 0.0);

    if scheme == SchemeKind::Fd5 {
        let w = 1.0 / (12.0 * h_tilde * h_tilde);
        let stencil = [-w, 16.0 * w, -30.0 * w, 16.0 * w, -w];
        for i in 0..m {
            let cells = disc.cells();
            let nu = 0.5 * (cells.nu[i] + cells.nu[i + 1]);
            let eps = 0.5 * (cells.eps[i] + cells.eps[i + 1]);
            let e = field[i];
            let (d1, d2) = match kind {
                Linearization::Newton => {
                    let (j1, j2) = scalar_cubic_derivatives(e);
                    (C64::new(nu, 0.0) + j1 * eps, j2 * eps)
                }
                Linearization::Frozen => (C64::new(nu + eps * e.norm_sqr(), 0.0), zero),
            };
            jac.j1[i][p] += d1;
            jac.j2[i][p] += d2;
            for (s, coef) in stencil.iter().enumerate() {
                let col = i as isize + s as isize - 2;
                if col >= 0 && col < m as isize {
                    jac.j1[i][(col - i as isize + 2) as usize] += *coef;
                } else if col < 0 {
                    // ghost E_{col} = const + q^{-col} E_0
                    jac.j1[i][2 - i] += q.powu((-col) as u32) * *coef;
                } else {
                    let layer = (col - m as isize + 1) as u32;
                    jac.j1[i][2 + (m - 1) - i] += q.powu(layer) * *coef;
                }
            }
        }
        return Ok(jac);
    }

    let so = disc.second_order_tensors();
    for i in 0..m {
        let a = ext[i + 1];
        for (side, b) in [(-1isize, ext[i]), (1, ext[i + 2])] {
            let cell = disc.cell(if side < 0 { i } else { i + 1 });
            let d = match kind {
                Linearization::Newton => half_cell_derivatives(scheme, cell, so, h_tilde, a, b),
                Linearization::Frozen => {
                    let (alpha, beta) = frozen_half_cell(scheme, cell, so, h_tilde, a, b);
                    HalfCellDerivatives { da: alpha, da_conj: zero, db: beta, db_conj: zero }
                }
            };
            jac.j1[i][1] += d.da;
            jac.j2[i][1] += d.da_conj;
            let col = i as isize + side;
            if col >= 0 && col < m as isize {
                jac.j1[i][(1 + side) as usize] += d.db;
                jac.j2[i][(1 + side) as usize] += d.db_conj;
            } else {
                // ghost = const + q * E_boundary, and boundary node is i itself
                jac.j1[i][1] += d.db * q;
                jac.j2[i][1] += d.db_conj * q.conj();
            }
        }
    }
    Ok(jac)
}

/// Real block Jacobian `lift(J1) + lift(J2) (I (x) diag(1, -1))`.
pub fn assemble_jacobian(disc: &Discretization, field: &[C64]) -> Result<BlockBandedJacobian> {
    Ok(assemble_pair(disc, field, Linearization::Newton)?.to_real())
}
