//! The inductive construction `A_1, A_2, ...`: each step adds the next
//! vertex of the graph family and the next term of the dense sequence while
//! moving the previous matrix by less than `ε / 2^n` in operator norm.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphFamily;
use crate::iepg::{solve_iepg, IepgError, IepgProblem, SolverParams};
use crate::linalg::{dense_to_csv, op_norm, LinalgError, SymmetricMatrix};
use crate::spectrum::{DenseSequence, SpectrumSpec};

/// Maximum number of seed halvings per step.
pub const MAX_HALVINGS: usize = 8;
const MANIFEST: &str = "manifest.json";
const FORMAT_TAG: &str = "spectral-tower/1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("budget unattainable: closeness {closeness:e} >= budget {budget:e}")]
    BudgetUnattainable { closeness: f64, budget: f64 },
    #[error(transparent)]
    Solver(#[from] IepgError),
}

#[derive(Debug, Error)]
pub enum TowerError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("step {n} failed after retries: {reason}")]
    StepFailed { n: usize, reason: StepError, partial: Box<Tower> },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt tower in {path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TowerParams {
    pub solver: SolverParams,
}

/// Step budget `ε / 2^n` for the move from `A_n` to `A_{n+1}`.
pub fn budget(epsilon: f64, n: usize) -> f64 {
    epsilon / 2f64.powi(n as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TowerStep {
    pub n: usize,
    /// `A_n`.
    pub matrix: SymmetricMatrix,
    /// `||A_{n-1} ⊕ [λ_n] - A_n||_op`; zero for `n = 1`.
    pub closeness: f64,
    pub residual: f64,
    /// Smallest edge magnitude, `None` when `G_n` has no edges.
    pub min_edge: Option<f64>,
    /// Seed magnitude of the successful attempt, `None` if no solve was needed.
    pub eta_used: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    pub family: GraphFamily,
    pub spec: SpectrumSpec,
    pub epsilon: f64,
    pub params: TowerParams,
    /// Number of steps requested; a partial tower has fewer `steps`.
    pub target_steps: usize,
    pub lambdas: DenseSequence,
    pub steps: Vec<TowerStep>,
}

/// Finite section `A_n ⊕ diag(λ_{n+1}, ..., λ_K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMatrix {
    pub base: SymmetricMatrix,
    pub tail: Vec<f64>,
}

impl TruncatedMatrix {
    pub fn order(&self) -> usize {
        self.base.order() + self.tail.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.base.order();
        let k = self.order();
        let mut m = DMatrix::zeros(k, k);
        m.view_mut((0, 0), (n, n)).copy_from(&self.base.to_dense());
        for (off, &v) in self.tail.iter().enumerate() {
            m[(n + off, n + off)] = v;
        }
        m
    }
}

fn min_edge(a: &SymmetricMatrix) -> Option<f64> {
    a.offdiag().values().map(|v| v.abs()).reduce(f64::min)
}

/// Extends `A_n` by one vertex so that the result has graph
/// `family.prefix(n + 1)` and spectrum `targets` (which are `λ_1..λ_{n+1}`).
///
/// The new edges are seeded with magnitude `η` and alternating signs, then
/// the inverse eigenvalue solver restores the spectrum. `η` starts at
/// `budget / (4 sqrt(m + 1))` for `m` new edges and halves on failure, but
/// never drops below `2 τ`.
pub fn extend_step(
    a_n: &SymmetricMatrix,
    family: &GraphFamily,
    targets: &[f64],
    budget: f64,
    params: &TowerParams,
) -> Result<TowerStep, StepError> {
    let n1 = a_n.order() + 1;
    assert_eq!(targets.len(), n1, "targets must be λ_1..λ_(n+1)");
    let lambda_next = targets[n1 - 1];
    let candidate = a_n.direct_sum_scalar(lambda_next);
    let new_edges = family.new_edges_at(n1);

    if new_edges.is_empty() {
        return Ok(TowerStep {
            n: n1,
            min_edge: min_edge(&candidate),
            matrix: candidate,
            closeness: 0.0,
            residual: 0.0,
            eta_used: None,
        });
    }

    let tau = params.solver.tau_edge;
    let m = new_edges.len() as f64;
    // the new column alone has norm at least tau * sqrt(m)
    let floor = tau * m.sqrt();
    if floor >= budget {
        return Err(StepError::BudgetUnattainable { closeness: floor, budget });
    }

    let graph = family.prefix(n1);
    let eta_min = 2.0 * tau;
    let mut eta = (budget / (4.0 * (m + 1.0).sqrt())).max(eta_min);
    let mut last_err = None;
    for attempt in 0..=MAX_HALVINGS {
        let mut init = candidate.clone();
        for (k, &(i, j)) in new_edges.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            init.set(i, j, sign * eta).expect("edge within order");
        }
        let solver =
            SolverParams { seed: params.solver.seed ^ ((n1 as u64) << 8) ^ attempt as u64, ..params.solver };
        let problem = IepgProblem::new(graph.clone(), targets.to_vec(), init, solver)?;
        match solve_iepg(&problem) {
            Ok(sol) => {
                let closeness = op_norm(&candidate.sub(&sol.matrix).expect("same order"));
                if closeness < budget {
                    return Ok(TowerStep {
                        n: n1,
                        min_edge: min_edge(&sol.matrix),
                        matrix: sol.matrix,
                        closeness,
                        residual: sol.residual,
                        eta_used: Some(eta),
                    });
                }
                last_err = Some(StepError::BudgetUnattainable { closeness, budget });
            }
            Err(e) => last_err = Some(StepError::Solver(e)),
        }
        if eta <= eta_min {
            break;
        }
        eta = (eta * 0.5).max(eta_min);
    }
    Err(last_err.expect("at least one attempt"))
}

/// Builds `A_1, ..., A_N` with step budgets `ε / 2^n`.
pub fn build_tower(
    family: &GraphFamily,
    spec: &SpectrumSpec,
    n_steps: usize,
    epsilon: f64,
    params: &TowerParams,
) -> Result<Tower, TowerError> {
    if n_steps == 0 {
        return Err(TowerError::InvalidParams("N must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(TowerError::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    let s = &params.solver;
    if !(s.tol_spec > 0.0 && s.tau_edge > 0.0 && s.max_iter > 0) {
        return Err(TowerError::InvalidParams("tol_spec, tau_edge and max_iter must be positive".into()));
    }
    let lambdas = spec.dense_enumerate(n_steps);
    let mut tower = Tower {
        family: family.clone(),
        spec: spec.clone(),
        epsilon,
        params: *params,
        target_steps: n_steps,
        steps: vec![TowerStep {
            n: 1,
            matrix: SymmetricMatrix::from_diagonal(&lambdas.terms[..1]),
            closeness: 0.0,
            residual: 0.0,
            min_edge: None,
            eta_used: None,
        }],
        lambdas,
    };
    for n in 1..n_steps {
        let prev = &tower.steps[n - 1].matrix;
        match extend_step(prev, family, &tower.lambdas.terms[..=n], budget(epsilon, n), params) {
            Ok(step) => tower.steps.push(step),
            Err(reason) => return Err(TowerError::StepFailed { n: n + 1, reason, partial: Box::new(tower) }),
        }
    }
    Ok(tower)
}

impl Tower {
    pub fn is_complete(&self) -> bool {
        self.steps.len() == self.target_steps
    }

    /// `λ_1, ..., λ_count`, extending the enumeration if needed.
    pub fn lambdas_up_to(&self, count: usize) -> Vec<f64> {
        if count <= self.lambdas.len() {
            self.lambdas.terms[..count].to_vec()
        } else {
            self.spec.dense_enumerate(count).terms
        }
    }

    /// `M_n` truncated at order `K`.
    pub fn assemble_truncation(&self, n: usize, k: usize) -> Result<TruncatedMatrix, TowerError> {
        if n == 0 || n > self.steps.len() {
            return Err(TowerError::InvalidParams(format!("step {n} outside 1..={}", self.steps.len())));
        }
        if k < n {
            return Err(TowerError::InvalidParams(format!("truncation order {k} < n = {n}")));
        }
        let lambdas = self.lambdas_up_to(k);
        Ok(TruncatedMatrix { base: self.steps[n - 1].matrix.clone(), tail: lambdas[n..k].to_vec() })
    }

    /// Writes `manifest.json` plus `step_NNN.csv` for every step.
    pub fn save(&self, dir: &Path) -> Result<(), TowerError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| TowerError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut steps = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            let file = format!("step_{:03}.csv", step.n);
            let path = dir.join(&file);
            fs::write(&path, dense_to_csv(&step.matrix.to_dense())).map_err(io(&path))?;
            steps.push(StepRecord {
                n: step.n,
                file,
                closeness: step.closeness,
                residual: step.residual,
                min_edge: step.min_edge,
                eta_used: step.eta_used,
            });
        }
        let manifest = Manifest {
            format: FORMAT_TAG.to_string(),
            family: self.family.clone(),
            spec: self.spec.clone(),
            epsilon: self.epsilon,
            target_steps: self.target_steps,
            built_steps: self.steps.len(),
            params: self.params,
            lambdas: self.lambdas.terms.clone(),
            steps,
        };
        let path = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io(&path))
    }

    /// Reads a tower written by [`Tower::save`]. Matrices are taken from the
    /// CSV files; off-diagonal zeros become structural zeros.
    pub fn load(dir: &Path) -> Result<Self, TowerError> {
        let corrupt = |msg: String| TowerError::Corrupt { path: dir.to_path_buf(), msg };
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|source| TowerError::Io { path, source })?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| corrupt(format!("manifest: {e}")))?;
        if manifest.format != FORMAT_TAG {
            return Err(corrupt(format!("unknown format `{}`", manifest.format)));
        }
        if manifest.steps.len() != manifest.built_steps || manifest.steps.is_empty() {
            return Err(corrupt("step list does not match built_steps".into()));
        }
        if manifest.lambdas.len() < manifest.built_steps {
            return Err(corrupt("fewer lambdas than steps".into()));
        }
        let mut steps = Vec::with_capacity(manifest.steps.len());
        for (idx, rec) in manifest.steps.iter().enumerate() {
            if rec.n != idx + 1 {
                return Err(corrupt(format!("step {} listed at position {}", rec.n, idx + 1)));
            }
            let path = dir.join(&rec.file);
            let csv = fs::read_to_string(&path).map_err(|source| TowerError::Io { path, source })?;
            let matrix =
                SymmetricMatrix::from_csv(&csv).map_err(|e| corrupt(format!("{}: {e}", rec.file)))?;
            if matrix.order() != rec.n {
                return Err(corrupt(format!("{}: order {} but step {}", rec.file, matrix.order(), rec.n)));
            }
            steps.push(TowerStep {
                n: rec.n,
                matrix,
                closeness: rec.closeness,
                residual: rec.residual,
                min_edge: rec.min_edge,
                eta_used: rec.eta_used,
            });
        }
        Ok(Self {
            family: manifest.family,
            lambdas: DenseSequence { spec: manifest.spec.clone(), terms: manifest.lambdas },
            spec: manifest.spec,
            epsilon: manifest.epsilon,
            params: manifest.params,
            target_steps: manifest.target_steps,
            steps,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StepRecord {
    n: usize,
    file: String,
    closeness: f64,
    residual: f64,
    min_edge: Option<f64>,
    eta_used: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    family: GraphFamily,
    spec: SpectrumSpec,
    epsilon: f64,
    target_steps: usize,
    built_steps: usize,
    params: TowerParams,
    lambdas: Vec<f64>,
    steps: Vec<StepRecord>,
}
