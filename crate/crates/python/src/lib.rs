//! Python bindings: solve a layered slab, sample the continuum reference and
//! dump the fourth-order coefficients.

use kerr1d::coefficients::coefficient_table;
use kerr1d::oracles::{shooting_solve, transmittance_curve, ShootingConfig};
use kerr1d::solvers::{linear_solution, newton_solve, NewtonConfig};
use kerr1d::{build_grid, DiscreteField, Discretization, MaterialProfile, NlhError, ProblemSpec, SchemeKind, C64};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: NlhError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn problem(k0: f64, z_max: f64, layers: &[(f64, f64)]) -> PyResult<ProblemSpec> {
    let mat = MaterialProfile::equal_layers(z_max, layers).map_err(py_err)?;
    ProblemSpec::new(k0, mat).map_err(py_err)
}

/// Solves the slab made of equal-thickness `layers = [(nu, eps), ...]` on
/// `m` nodes. `seed` is `"linear"` or `"oracle"`.
#[pyfunction]
#[pyo3(signature = (k0, z_max, layers, m, scheme="fv4", omega=1.0, tol=1e-10, max_iter=None, seed="linear", t_guess=1.0))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    k0: f64,
    z_max: f64,
    layers: Vec<(f64, f64)>,
    m: usize,
    scheme: &str,
    omega: f64,
    tol: f64,
    max_iter: Option<usize>,
    seed: &str,
    t_guess: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: SchemeKind = scheme.parse().map_err(py_err)?;
    let spec = problem(k0, z_max, &layers)?;
    let grid = build_grid(&spec, m).map_err(py_err)?;
    let disc = Discretization::new(kind, &spec, &grid).map_err(py_err)?;
    let initial = match seed {
        "linear" => linear_solution(&disc).map_err(py_err)?,
        "oracle" => {
            let sol = shooting_solve(&spec, C64::new(t_guess, 0.0), &ShootingConfig::default()).map_err(py_err)?;
            DiscreteField::new(sol.sample(&grid.nodes())).map_err(py_err)?
        }
        other => return Err(PyValueError::new_err(format!("unknown seed {other:?}"))),
    };
    let cfg = NewtonConfig {
        omega,
        tol_rel: tol,
        max_iter: max_iter.unwrap_or(if omega == 1.0 { 20 } else { 60 }),
        ..NewtonConfig::plain()
    };
    let rep = py.detach(|| newton_solve(&disc, &initial, &cfg)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("z", grid.nodes())?;
    out.set_item("field", rep.field.values().to_vec())?;
    out.set_item("status", rep.status.as_str())?;
    out.set_item("iterations", rep.iterations)?;
    out.set_item("residual_history", rep.residual_history.clone())?;
    out.set_item("r", rep.r)?;
    out.set_item("t", rep.t)?;
    out.set_item("transmittance", rep.transmittance())?;
    Ok(out)
}

/// Continuum reference field at the points `z`.
#[pyfunction]
#[pyo3(signature = (k0, z_max, layers, z, t_guess=1.0))]
fn reference_field(py: Python<'_>, k0: f64, z_max: f64, layers: Vec<(f64, f64)>, z: Vec<f64>, t_guess: f64) -> PyResult<Vec<C64>> {
    let spec = problem(k0, z_max, &layers)?;
    let sol = py.detach(|| shooting_solve(&spec, C64::new(t_guess, 0.0), &ShootingConfig::default())).map_err(py_err)?;
    Ok(sol.sample(&z))
}

/// `(multiplier, |T|^2)` pairs traced by transmitted amplitude `taus`.
#[pyfunction]
fn continuum_transmittance(py: Python<'_>, k0: f64, z_max: f64, layers: Vec<(f64, f64)>, taus: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    let spec = problem(k0, z_max, &layers)?;
    Ok(py.detach(|| transmittance_curve(&spec, &taus, &ShootingConfig::default())))
}

/// Rows `(i, j, k, value)` of the fourth-order tensors; `j`, `k` are `None`
/// for the load vector.
#[pyfunction]
fn coefficients(nu: f64, h_tilde: f64) -> Vec<(usize, Option<usize>, Option<usize>, f64)> {
    coefficient_table(nu, h_tilde).into_iter().map(|r| (r.i, r.j, r.k, r.value)).collect()
}

#[pymodule]
fn kerr1d_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(reference_field, m)?)?;
    m.add_function(wrap_pyfunction!(continuum_transmittance, m)?)?;
    m.add_function(wrap_pyfunction!(coefficients, m)?)?;
    Ok(())
}
