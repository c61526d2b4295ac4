//! Python bindings. Matrices cross the boundary as lists of row lists.

use std::path::PathBuf;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spectral_tower::linalg::{eigh_dense, op_norm_dense};
use spectral_tower::verify::{verify_tower_with, VerifyOptions};
use spectral_tower::{
    build_tower, Graph, GraphFamily, IepgProblem, SolverParams, SpectrumSpec, SymmetricMatrix, TowerError,
    TowerParams,
};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dense(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(value_err("matrix must be square"));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if m != m.transpose() {
        return Err(value_err("matrix must be symmetric"));
    }
    Ok(m)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn family(name: &str, seed: u64, p: f64) -> PyResult<GraphFamily> {
    GraphFamily::from_name(name, seed, p).map_err(value_err)
}

/// Edges `(i, j)` (1-based) of the first `n` vertices of a named family.
#[pyfunction]
#[pyo3(signature = (name, n, seed = 0, p = 0.5))]
fn family_prefix(name: &str, n: usize, seed: u64, p: f64) -> PyResult<Vec<(usize, usize)>> {
    Ok(family(name, seed, p)?.prefix(n).edges().collect())
}

/// First `count` terms of the dense enumeration of a spectrum DSL string.
#[pyfunction]
fn dense_enumerate(spec: &str, count: usize) -> PyResult<Vec<f64>> {
    Ok(SpectrumSpec::parse(spec).map_err(value_err)?.dense_enumerate(count).terms)
}

/// Ascending eigenvalues and eigenvectors (as columns) of a symmetric matrix.
#[pyfunction]
fn eigh(matrix: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let eig = eigh_dense(&to_dense(&matrix)?);
    Ok((eig.values.clone(), to_rows(&eig.vectors)))
}

#[pyfunction]
fn op_norm(matrix: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(op_norm_dense(&to_dense(&matrix)?))
}

#[pyfunction]
fn hausdorff(s: Vec<f64>, t: Vec<f64>) -> PyResult<f64> {
    spectral_tower::hausdorff(&s, &t).map_err(value_err)
}

/// Solves the inverse eigenvalue problem on the graph with `n` vertices and
/// the given edges. Returns `(matrix, residual, iterations)`.
#[pyfunction]
#[pyo3(signature = (n, edges, targets, init = None, tol_spec = 1e-9, tau_edge = 1e-3, max_iter = 200, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn solve_iepg(
    n: usize,
    edges: Vec<(usize, usize)>,
    targets: Vec<f64>,
    init: Option<Vec<Vec<f64>>>,
    tol_spec: f64,
    tau_edge: f64,
    max_iter: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, f64, usize)> {
    let graph = Graph::from_edges(n, edges).map_err(value_err)?;
    let init = match init {
        Some(rows) => SymmetricMatrix::from_dense(&to_dense(&rows)?),
        None => SymmetricMatrix::zeros(n),
    };
    let params = SolverParams { tol_spec, tau_edge, max_iter, seed };
    let problem = IepgProblem::new(graph, targets, init, params).map_err(value_err)?;
    let sol = spectral_tower::solve_iepg(&problem).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((to_rows(&sol.matrix.to_dense()), sol.residual, sol.iterations))
}

/// A built (possibly partial) tower.
#[pyclass(name = "Tower")]
struct PyTower {
    inner: spectral_tower::Tower,
    /// Set when construction stopped early.
    #[pyo3(get)]
    failure: Option<String>,
}

#[pymethods]
impl PyTower {
    /// Builds a tower. Construction failures return the partial tower with
    /// `failure` set instead of raising.
    #[staticmethod]
    #[pyo3(signature = (family_name, spec, n, epsilon = 0.1, tol_spec = 1e-9, tau_edge = 1e-3, max_iter = 200, seed = 0, p = 0.5))]
    #[allow(clippy::too_many_arguments)]
    fn build(
        family_name: &str,
        spec: &str,
        n: usize,
        epsilon: f64,
        tol_spec: f64,
        tau_edge: f64,
        max_iter: usize,
        seed: u64,
        p: f64,
    ) -> PyResult<Self> {
        let fam = family(family_name, seed, p)?;
        let spec = SpectrumSpec::parse(spec).map_err(value_err)?;
        let params = TowerParams { solver: SolverParams { tol_spec, tau_edge, max_iter, seed } };
        match build_tower(&fam, &spec, n, epsilon, &params) {
            Ok(inner) => Ok(Self { inner, failure: None }),
            Err(TowerError::StepFailed { n, reason, partial }) => {
                Ok(Self { inner: *partial, failure: Some(format!("step {n}: {reason}")) })
            }
            Err(e) => Err(value_err(e)),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = spectral_tower::Tower::load(&path).map_err(value_err)?;
        Ok(Self { inner, failure: None })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(value_err)
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps.len()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas.terms.clone()
    }

    /// Dense `A_n` (1-based step index).
    fn matrix(&self, n: usize) -> PyResult<Vec<Vec<f64>>> {
        let step = n
            .checked_sub(1)
            .and_then(|i| self.inner.steps.get(i))
            .ok_or_else(|| value_err(format!("step {n} out of range")))?;
        Ok(to_rows(&step.matrix.to_dense()))
    }

    /// Dense `A_n ⊕ diag(λ_{n+1}, ..., λ_K)`.
    fn truncation(&self, n: usize, k: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&self.inner.assemble_truncation(n, k).map_err(value_err)?.to_dense()))
    }

    /// Runs every check and returns the report as JSON text.
    #[pyo3(signature = (extra_order = 10, window = (-10.0, 10.0)))]
    fn verify(&self, extra_order: usize, window: (f64, f64)) -> String {
        let opts = VerifyOptions { extra_order, window, grid_step: None };
        verify_tower_with(&self.inner, &opts).to_json()
    }
}

#[pymodule]
fn spectral_tower_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(family_prefix, m)?)?;
    m.add_function(wrap_pyfunction!(dense_enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(eigh, m)?)?;
    m.add_function(wrap_pyfunction!(op_norm, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(solve_iepg, m)?)?;
    m.add_class::<PyTower>()?;
    Ok(())
}
