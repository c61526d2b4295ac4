//! Graph-constrained inverse eigenvalue solver.
//!
//! The free coordinates of a matrix with graph `G` are its `n` diagonal
//! entries followed by its `|E|` edge entries. Newton's method is applied to
//! `F(x) = sort(eig(A(x))) - sort(targets)`; since there are `n` equations
//! and `n + |E|` unknowns each step takes the minimum-norm least-squares
//! solution, damped by step halving on `||F||`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Graph};
use crate::linalg::{eigh, op_norm, EigResult, SymmetricMatrix};

/// Relative eigenvalue gap below which a spectrum counts as degenerate.
pub const COLLISION_GAP: f64 = 1e-9;
const PERTURBATION_NORM: f64 = 1e-8;
const MAX_PERTURBATIONS: usize = 20;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IepgError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("eigenvalue collision: gap {gap:e}")]
    Collision { gap: f64 },
    #[error("eigenvalue collision persisted after {0} perturbations")]
    CollisionPersisted(usize),
    #[error("max_iter exceeded ({iterations} iterations, residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("edge floor violated at {edge:?}: |{value:e}| < {tau:e}")]
    EdgeFloorViolated { edge: Edge, value: f64, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Bound on `max_k |λ_k - target_k|`.
    pub tol_spec: f64,
    /// Smallest admissible magnitude of an edge entry.
    pub tau_edge: f64,
    pub max_iter: usize,
    /// Seed for the perturbations applied to degenerate iterates.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { tol_spec: 1e-9, tau_edge: 1e-3, max_iter: 200, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct IepgProblem {
    pub graph: Graph,
    pub targets: Vec<f64>,
    pub init: SymmetricMatrix,
    pub params: SolverParams,
}

impl IepgProblem {
    pub fn new(
        graph: Graph,
        targets: Vec<f64>,
        init: SymmetricMatrix,
        params: SolverParams,
    ) -> Result<Self, IepgError> {
        let n = graph.n_vertices();
        let bad = |msg: String| Err(IepgError::InvalidProblem(msg));
        if targets.len() != n {
            return bad(format!("{} targets for {n} vertices", targets.len()));
        }
        if init.order() != n {
            return bad(format!("init has order {}, graph has {n} vertices", init.order()));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return bad("non-finite target".into());
        }
        let mut sorted = targets.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("targets must be pairwise distinct".into());
        }
        if let Some((e, _)) = init.offdiag().iter().find(|(e, v)| **v != 0.0 && !graph.has_edge(e.0, e.1)) {
            return bad(format!("init has a nonzero entry at non-edge {e:?}"));
        }
        let p = &params;
        if !(p.tol_spec > 0.0 && p.tau_edge > 0.0 && p.max_iter > 0) {
            return bad("tol_spec, tau_edge and max_iter must be positive".into());
        }
        Ok(Self { graph, targets, init, params })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IepgSolution {
    pub matrix: SymmetricMatrix,
    /// `max_k |λ_k(matrix) - target_k|` after ascending sort.
    pub residual: f64,
    /// `||matrix - init||_op`.
    pub displacement: f64,
    pub iterations: usize,
    /// Residual at every Newton iterate, starting with the initial matrix.
    pub history: Vec<f64>,
}

/// Diagonal positions `(i, i)` followed by the edges in lexicographic order.
pub fn free_coordinates(graph: &Graph) -> Vec<Edge> {
    (1..=graph.n_vertices()).map(|i| (i, i)).chain(graph.edges()).collect()
}

fn coords_of(a: &SymmetricMatrix, chart: &[Edge]) -> DVector<f64> {
    DVector::from_iterator(chart.len(), chart.iter().map(|&(i, j)| a.get(i, j)))
}

// Only chart positions receive storage, so non-edges stay structural zeros.
fn matrix_at(n: usize, chart: &[Edge], x: &DVector<f64>) -> SymmetricMatrix {
    let diag = x.as_slice()[..n].to_vec();
    let entries = chart[n..].iter().zip(&x.as_slice()[n..]).map(|(&(i, j), &v)| (i, j, v));
    SymmetricMatrix::from_entries(diag, entries).expect("chart positions are in range")
}

/// Derivatives `∂λ_k / ∂x_e` of the ascending eigenvalues with respect to the
/// free coordinates of `graph`.
pub fn spectral_jacobian(a: &SymmetricMatrix, graph: &Graph) -> Result<DMatrix<f64>, IepgError> {
    let eig = eigh(a);
    check_gap(&eig)?;
    Ok(jacobian_from_eig(&eig, &free_coordinates(graph)))
}

fn check_gap(eig: &EigResult) -> Result<(), IepgError> {
    let gap = eig.min_gap();
    if gap <= COLLISION_GAP * (1.0 + eig.op_norm()) {
        Err(IepgError::Collision { gap })
    } else {
        Ok(())
    }
}

fn jacobian_from_eig(eig: &EigResult, chart: &[Edge]) -> DMatrix<f64> {
    let n = eig.values.len();
    let q = &eig.vectors;
    DMatrix::from_fn(n, chart.len(), |k, e| {
        let (i, j) = (chart[e].0 - 1, chart[e].1 - 1);
        if i == j {
            q[(i, k)] * q[(i, k)]
        } else {
            2.0 * q[(i, k)] * q[(j, k)]
        }
    })
}

fn residual_vector(eig: &EigResult, targets: &[f64]) -> DVector<f64> {
    DVector::from_iterator(targets.len(), eig.values.iter().zip(targets).map(|(l, t)| l - t))
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Random symmetric matrix supported on the chart, scaled to `norm`.
fn pattern_perturbation(rng: &mut ChaCha8Rng, n: usize, chart: &[Edge], norm: f64) -> DVector<f64> {
    let raw = DVector::from_iterator(chart.len(), (0..chart.len()).map(|_| rng.random_range(-1.0..1.0)));
    let scale = op_norm(&matrix_at(n, chart, &raw));
    if scale == 0.0 {
        raw
    } else {
        raw * (norm / scale)
    }
}

/// Solves the inverse eigenvalue problem for `problem.graph`.
pub fn solve_iepg(problem: &IepgProblem) -> Result<IepgSolution, IepgError> {
    let params = problem.params;
    let n = problem.graph.n_vertices();
    let chart = free_coordinates(&problem.graph);
    let mut targets = problem.targets.clone();
    targets.sort_by(f64::total_cmp);
    let scale = 1.0 + targets.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    // polish past tol_spec while Newton still makes progress
    let polish_tol = (params.tol_spec * 1e-3).max(64.0 * f64::EPSILON * scale);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut x = coords_of(&problem.init, &chart);
    let mut history = Vec::new();
    let mut perturbations = 0;
    let mut iterations = 0;

    let mut eig = eigh(&matrix_at(n, &chart, &x));
    let mut f = residual_vector(&eig, &targets);
    loop {
        let residual = max_abs(&f);
        history.push(residual);
        if residual <= polish_tol {
            break;
        }
        if iterations >= params.max_iter {
            if residual <= params.tol_spec {
                break;
            }
            return Err(IepgError::MaxIterExceeded { iterations, residual });
        }
        iterations += 1;

        if check_gap(&eig).is_err() {
            perturbations += 1;
            if perturbations > MAX_PERTURBATIONS {
                return Err(IepgError::CollisionPersisted(MAX_PERTURBATIONS));
            }
            x += pattern_perturbation(&mut rng, n, &chart, PERTURBATION_NORM);
            eig = eigh(&matrix_at(n, &chart, &x));
            f = residual_vector(&eig, &targets);
            continue;
        }

        let jac = jacobian_from_eig(&eig, &chart);
        let step = min_norm_step(jac, &f);
        let f_norm = f.norm();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &step * t;
            let trial_eig = eigh(&matrix_at(n, &chart, &trial));
            let trial_f = residual_vector(&trial_eig, &targets);
            if trial_f.norm() < f_norm {
                accepted = Some((trial, trial_eig, trial_f));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((nx, ne, nf)) => {
                x = nx;
                eig = ne;
                f = nf;
            }
            // no decrease: rounding floor reached, or the step direction is useless
            None if residual <= params.tol_spec => break,
            None => {
                x += &step * t;
                eig = eigh(&matrix_at(n, &chart, &x));
                f = residual_vector(&eig, &targets);
            }
        }
    }

    for (k, &(i, j)) in chart[n..].iter().enumerate() {
        let value = x[n + k];
        if value.abs() < params.tau_edge {
            return Err(IepgError::EdgeFloorViolated { edge: (i, j), value, tau: params.tau_edge });
        }
    }
    let matrix = matrix_at(n, &chart, &x);
    let displacement = op_norm(&matrix.sub(&problem.init).expect("same order"));
    Ok(IepgSolution {
        residual: *history.last().expect("at least one residual"),
        matrix,
        displacement,
        iterations,
        history,
    })
}

/// Minimum-norm solution of `J dx = -f`.
fn min_norm_step(jac: DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let svd = jac.svd(true, true);
    let cutoff = 1e-13 * svd.singular_values.max();
    svd.solve(&(-f), cutoff).expect("u and v were computed")
}
