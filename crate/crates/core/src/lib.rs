//! Finite towers of real symmetric matrices with a prescribed graph and a
//! prescribed spectrum.
//!
//! Given a countable graph family and a closed infinite set `Λ ⊂ ℝ`, the
//! builder produces matrices `A_1, A_2, ..., A_N` where `A_n` has the graph
//! induced on the first `n` vertices and spectrum `{λ_1, ..., λ_n}` for a
//! dense sequence in `Λ`, and consecutive matrices satisfy
//! `||A_n ⊕ [λ_{n+1}] - A_{n+1}||_op < ε / 2^n`. The finite sections
//! `A_n ⊕ diag(λ_{n+1}, ..., λ_K)` then approximate a self-adjoint operator
//! with graph `G` and spectrum `Λ`, and [`verify`] checks every finite
//! inequality this relies on.

pub mod cli;
pub mod graph;
pub mod iepg;
pub mod linalg;
pub mod spectrum;
pub mod tower;
pub mod verify;

pub use graph::{Graph, GraphError, GraphFamily, TailRule};
pub use iepg::{
    free_coordinates, solve_iepg, spectral_jacobian, IepgError, IepgProblem, IepgSolution, SolverParams,
};
pub use linalg::{eigh, hausdorff, op_norm, EigResult, LinalgError, SymmetricMatrix};
pub use spectrum::{
    covering_radius, dense_enumerate, ClosedPiece, DenseSequence, SpectrumError, SpectrumSpec,
};
pub use tower::{
    build_tower, extend_step, StepError, Tower, TowerError, TowerParams, TowerStep, TruncatedMatrix,
};
pub use verify::{verify_tower, weyl_check, window_spectrum_gap, Check, Report};
