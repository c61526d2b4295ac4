//! Dense symmetric eigensolver (cyclic Jacobi), operator norms, Hausdorff
//! distance of finite point sets, and the pattern-aware symmetric matrix type.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{Edge, Graph};
use crate::spectrum::nearest_distance;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("hausdorff distance needs two nonempty sets")]
    EmptySet,
    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("index ({i}, {j}) outside order {n}")]
    Index { i: usize, j: usize, n: usize },
}

/// Real symmetric matrix whose off-diagonal support is stored explicitly.
///
/// Indices are 1-based. Off-diagonal positions without an entry are
/// structural zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    diag: Vec<f64>,
    offdiag: BTreeMap<Edge, f64>,
}

impl SymmetricMatrix {
    pub fn zeros(order: usize) -> Self {
        Self { diag: vec![0.0; order], offdiag: BTreeMap::new() }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        Self { diag: values.to_vec(), offdiag: BTreeMap::new() }
    }

    /// Builds from the diagonal plus explicit `(i, j, value)` triples.
    pub fn from_entries<I>(diag: Vec<f64>, entries: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut m = Self { diag, offdiag: BTreeMap::new() };
        for (i, j, v) in entries {
            m.set(i, j, v)?;
        }
        Ok(m)
    }

    /// Takes the symmetric part of a dense matrix, storing every nonzero
    /// off-diagonal entry of the upper triangle.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.diag[i] = a[(i, i)];
            for j in i + 1..n {
                if a[(i, j)] != 0.0 {
                    m.offdiag.insert((i + 1, j + 1), a[(i, j)]);
                }
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Stored off-diagonal entries keyed by `(i, j)` with `i < j`.
    pub fn offdiag(&self) -> &BTreeMap<Edge, f64> {
        &self.offdiag
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i - 1]
        } else {
            self.offdiag.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
        }
    }

    /// Sets entry `(i, j)` and its mirror. Off-diagonal writes create storage.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<(), LinalgError> {
        let n = self.order();
        if i == 0 || j == 0 || i > n || j > n {
            return Err(LinalgError::Index { i, j, n });
        }
        if !value.is_finite() {
            return Err(LinalgError::NonFinite(i, j));
        }
        if i == j {
            self.diag[i - 1] = value;
        } else {
            self.offdiag.insert((i.min(j), i.max(j)), value);
        }
        Ok(())
    }

    /// Graph formed by the nonzero off-diagonal entries.
    pub fn support(&self) -> Graph {
        Graph::from_edges(
            self.order().max(1),
            self.offdiag.iter().filter(|(_, v)| **v != 0.0).map(|(e, _)| *e),
        )
        .expect("stored keys are in range")
    }

    /// `self ⊕ [value]`.
    pub fn direct_sum_scalar(&self, value: f64) -> Self {
        let mut m = self.clone();
        m.diag.push(value);
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut a = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for (&(i, j), &v) in &self.offdiag {
            a[(i - 1, j - 1)] = v;
            a[(j - 1, i - 1)] = v;
        }
        debug_assert_eq!(a.nrows(), n);
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.diag.iter().chain(self.offdiag.values()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise difference; the result stores the union of both supports.
    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.order() != other.order() {
            return Err(LinalgError::OrderMismatch(self.order(), other.order()));
        }
        let diag = self.diag.iter().zip(&other.diag).map(|(a, b)| a - b).collect();
        let mut offdiag = self.offdiag.clone();
        for (e, v) in &other.offdiag {
            *offdiag.entry(*e).or_insert(0.0) -= v;
        }
        Ok(Self { diag, offdiag })
    }

    pub fn to_csv(&self) -> String {
        dense_to_csv(&self.to_dense())
    }

    /// Parses the matrix CSV format. Exact zeros off the diagonal become
    /// structural zeros.
    pub fn from_csv(text: &str) -> Result<Self, LinalgError> {
        Ok(Self::from_dense(&dense_from_csv(text)?))
    }
}

/// Writes `n` lines of `n` comma-separated values with 17 significant digits.
pub fn dense_to_csv(a: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if j > 0 {
                out.push(',');
            }
            // normalize -0.0 so structural zeros always print the same way
            write!(out, "{:.16e}", a[(i, j)] + 0.0).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads the square symmetric CSV format written by [`dense_to_csv`].
pub fn dense_from_csv(text: &str) -> Result<DMatrix<f64>, LinalgError> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, line)| {
            line.split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| LinalgError::Csv {
                        line: idx + 1,
                        msg: format!("invalid number `{}`", tok.trim()),
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if n == 0 {
        return Err(LinalgError::Csv { line: 1, msg: "empty matrix".into() });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(LinalgError::Csv {
                line: i + 1,
                msg: format!("expected {n} columns, found {}", row.len()),
            });
        }
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    for i in 0..n {
        for j in 0..n {
            if !a[(i, j)].is_finite() {
                return Err(LinalgError::NonFinite(i + 1, j + 1));
            }
            if j > i && a[(i, j)] != a[(j, i)] {
                return Err(LinalgError::NotSymmetric(i + 1, j + 1));
            }
        }
    }
    Ok(a)
}

/// Eigendecomposition with ascending eigenvalues and orthonormal
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigResult {
    /// Smallest distance between consecutive eigenvalues (`inf` for order 1).
    pub fn min_gap(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn op_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

pub fn eigh(a: &SymmetricMatrix) -> EigResult {
    eigh_dense(&a.to_dense())
}

/// Cyclic Jacobi eigensolver for a dense symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops to
/// `1e-14 * ||A||_F`. Each eigenvector is signed so that its
/// largest-magnitude component (first one on ties) is positive.
pub fn eigh_dense(a: &DMatrix<f64>) -> EigResult {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh_dense needs a square matrix");
    let mut w = a.clone();
    // symmetrize so the solver only ever sees a symmetric input
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = m;
            w[(j, i)] = m;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let fro = w.norm();
    let target = JACOBI_REL_TOL * fro;

    for sweep in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&w) <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (w[(p, p)], w[(q, q)]);
                // after a few sweeps, entries below rounding of both diagonals are dropped
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    w[(p, q)] = 0.0;
                    w[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                w[(p, p)] = app - t * apq;
                w[(q, q)] = aqq + t * apq;
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let (grp, grq) = (w[(r, p)], w[(r, q)]);
                        let np = grp - s * (grq + grp * tau);
                        let nq = grq + s * (grp - grq * tau);
                        w[(r, p)] = np;
                        w[(p, r)] = np;
                        w[(r, q)] = nq;
                        w[(q, r)] = nq;
                    }
                    let (vrp, vrq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = vrp - s * (vrq + vrp * tau);
                    v[(r, q)] = vrq + s * (vrp - vrq * tau);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let values = order.iter().map(|&k| w[(k, k)]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-12)).unwrap_or(0);
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    EigResult { values, vectors }
}

fn off_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Operator norm, `max_k |λ_k(A)|`.
pub fn op_norm(a: &SymmetricMatrix) -> f64 {
    eigh(a).op_norm()
}

pub fn op_norm_dense(a: &DMatrix<f64>) -> f64 {
    eigh_dense(a).op_norm()
}

/// Hausdorff distance between two finite nonempty subsets of the line.
pub fn hausdorff(s: &[f64], t: &[f64]) -> Result<f64, LinalgError> {
    if s.is_empty() || t.is_empty() {
        return Err(LinalgError::EmptySet);
    }
    Ok(directed_hausdorff(s, t).max(directed_hausdorff(t, s)))
}

/// `max_{x ∈ from} min_{y ∈ to} |x - y|`.
pub fn directed_hausdorff(from: &[f64], to: &[f64]) -> f64 {
    let mut sorted = to.to_vec();
    sorted.sort_by(f64::total_cmp);
    from.iter().map(|&x| nearest_distance(&sorted, x)).fold(0.0, f64::max)
}
