//! Independent verification of a built tower.
//!
//! Every check is recomputed from the matrices and the dense sequence with
//! the primitives in [`crate::linalg`]; builder-reported metrics are ignored.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{eigh, eigh_dense, hausdorff, op_norm, op_norm_dense, SymmetricMatrix};
use crate::spectrum::{covering_radius, Coverage};
use crate::tower::{budget, Tower, TowerError};

/// Rounding slack for the telescoping and column inequalities.
pub const ROUNDING_SLACK: f64 = 1e-12;
/// Extra slack for eigenvalue-based bounds.
pub const EIG_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub context: String,
}

impl Check {
    fn le(name: impl Into<String>, measured: f64, bound: f64, context: impl Into<String>) -> Self {
        Self { name: name.into(), pass: measured <= bound, measured, bound, context: context.into() }
    }

    fn lt(name: impl Into<String>, measured: f64, bound: f64, context: impl Into<String>) -> Self {
        Self { name: name.into(), pass: measured < bound, measured, bound, context: context.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: bool,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summary: Summary,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        let total = checks.len();
        Self { summary: Summary { pass: passed == total, total, passed, failed: total - passed }, checks }
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Checks whose name starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: &Path) -> Result<(), TowerError> {
        fs::write(path, self.to_json()).map_err(|source| TowerError::Io { path: path.to_path_buf(), source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Truncation order is `steps + extra_order`.
    pub extra_order: usize,
    pub window: (f64, f64),
    /// Defaults to `(hi - lo) / 1e4` when `None`.
    pub grid_step: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { extra_order: 10, window: (-10.0, 10.0), grid_step: None }
    }
}

impl VerifyOptions {
    fn grid_step(&self) -> f64 {
        self.grid_step.unwrap_or((self.window.1 - self.window.0) / 1e4)
    }
}

pub fn verify_tower(tower: &Tower) -> Report {
    verify_tower_with(tower, &VerifyOptions::default())
}

/// Runs the completeness, pattern, edge-floor, spectrum, closeness,
/// telescoping, column, inclusion and window checks.
pub fn verify_tower_with(tower: &Tower, opts: &VerifyOptions) -> Report {
    let mut checks = Vec::new();
    let built = tower.steps.len();
    checks.push(Check::le(
        "complete",
        (tower.target_steps - built.min(tower.target_steps)) as f64,
        0.0,
        format!("{built} of {} steps built", tower.target_steps),
    ));
    if built == 0 {
        return Report::from_checks(checks);
    }
    let tol = tower.params.solver.tol_spec;
    let tau = tower.params.solver.tau_edge;
    let k = built + opts.extra_order;
    let lambdas = tower.lambdas_up_to(k);

    for (idx, step) in tower.steps.iter().enumerate() {
        let n = idx + 1;
        let a = &step.matrix;
        if a.order() != n {
            checks.push(Check::le(format!("order[{n}]"), a.order() as f64, n as f64, "wrong order"));
            return Report::from_checks(checks);
        }
        checks.push(pattern_check(tower, n, a));
        if let Some(c) = edge_floor_check(tower, n, a, tau) {
            checks.push(c);
        }
        let mut target = lambdas[..n].to_vec();
        target.sort_by(f64::total_cmp);
        let dev = eigh(a).values.iter().zip(&target).fold(0.0f64, |m, (l, t)| m.max((l - t).abs()));
        checks.push(Check::le(format!("spectrum[{n}]"), dev, tol, format!("max |λ_k(A_{n}) - λ_k|")));
        if n >= 2 {
            let prev = tower.steps[n - 2].matrix.direct_sum_scalar(lambdas[n - 1]);
            let delta = op_norm(&prev.sub(a).expect("orders checked"));
            checks.push(Check::lt(
                format!("closeness[{n}]"),
                delta,
                budget(tower.epsilon, n - 1),
                format!("||A_{} ⊕ [λ_{n}] - A_{n}||", n - 1),
            ));
        }
    }

    let truncations: Vec<DMatrix<f64>> =
        (1..=built).map(|n| tower.assemble_truncation(n, k).expect("indices in range").to_dense()).collect();

    for n in 1..built {
        let mut worst: Option<(f64, f64, usize)> = None;
        let mut partial = 0.0;
        for m in n + 1..=built {
            partial += budget(tower.epsilon, m - 1);
            let diff = &truncations[m - 1] - &truncations[n - 1];
            let norm = op_norm_dense(&diff);
            let slack = partial - norm;
            if worst.is_none_or(|(v, b, _)| slack < b - v) {
                worst = Some((norm, partial, m));
            }
        }
        let (norm, bound, m) = worst.expect("m ranges over at least one value");
        checks.push(Check::le(
            format!("telescoping[{n}]"),
            norm,
            bound + ROUNDING_SLACK,
            format!("worst m={m}, K={k}: ||M_m - M_n|| vs sum of ε/2^j for j in {n}..{m}"),
        ));

        let diff = &truncations[n] - &truncations[n - 1];
        let (col, worst_col) =
            (0..k)
                .map(|i| (diff.column(i).norm(), i + 1))
                .fold((0.0, 0), |acc, c| if c.0 > acc.0 { c } else { acc });
        checks.push(Check::lt(
            format!("column[{n}]"),
            col,
            budget(tower.epsilon, n) + ROUNDING_SLACK,
            format!("max_i ||M_{n} e_i - M_{} e_i||, worst i={worst_col}, K={k}", n + 1),
        ));
    }

    let last = &truncations[built - 1];
    let last_eig = eigh_dense(last).values;
    let limit_slack = tol + tower.epsilon * 2f64.powi(1 - built as i32) + EIG_SLACK;
    let inclusion = lambdas[..built]
        .iter()
        .map(|l| last_eig.iter().map(|mu| (l - mu).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    checks.push(Check::le(
        "inclusion",
        inclusion,
        limit_slack,
        format!("max_j dist(λ_j, σ(M_{built})) at K={k}"),
    ));

    let gap = window_gap_of(tower, &last_eig, opts.window, opts.grid_step());
    let ctx = |what: &str| {
        if gap.empty {
            format!("{what}: window [{}, {}] misses Λ", opts.window.0, opts.window.1)
        } else {
            format!("{what} over [{}, {}] at n={built}, K={k}", opts.window.0, opts.window.1)
        }
    };
    checks.push(Check::le("gap_out", gap.gap_out, limit_slack, ctx("max dist(μ, Λ)")));
    let cover = covering_radius(&tower.spec, &lambdas, opts.window, opts.grid_step())
        .map(|c| c.radius)
        .unwrap_or(0.0);
    checks.push(Check::le("gap_in", gap.gap_in, cover + limit_slack, ctx("covering radius of σ(M) in Λ")));

    Report::from_checks(checks)
}

fn pattern_check(tower: &Tower, n: usize, a: &SymmetricMatrix) -> Check {
    let graph = tower.family.prefix(n);
    let mut violations = 0usize;
    let mut first = None;
    for i in 1..=n {
        for j in i + 1..=n {
            let v = a.get(i, j);
            if (v != 0.0) != graph.has_edge(i, j) {
                violations += 1;
                first.get_or_insert((i, j, v));
            }
        }
    }
    let context = match first {
        Some((i, j, v)) => format!("n={n}: entry ({i}, {j}) = {v:e} disagrees with G_{n}"),
        None => format!("n={n}: support equals G_{n}"),
    };
    Check::le(format!("pattern[{n}]"), violations as f64, 0.0, context)
}

fn edge_floor_check(tower: &Tower, n: usize, a: &SymmetricMatrix, tau: f64) -> Option<Check> {
    let graph = tower.family.prefix(n);
    let (value, (i, j)) =
        graph.edges().map(|(i, j)| (a.get(i, j).abs(), (i, j))).min_by(|x, y| x.0.total_cmp(&y.0))?;
    Some(Check {
        name: format!("edge_floor[{n}]"),
        pass: value >= tau,
        measured: value,
        bound: tau,
        context: format!("n={n}: smallest edge entry at ({i}, {j})"),
    })
}

/// How far a truncation spectrum strays from `Λ`, and how much of `Λ` it
/// covers, inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowGap {
    pub gap_out: f64,
    pub gap_in: f64,
    pub empty: bool,
}

pub fn window_spectrum_gap(
    tower: &Tower,
    n: usize,
    k: usize,
    window: (f64, f64),
    grid_step: f64,
) -> Result<WindowGap, TowerError> {
    let (lo, hi) = window;
    if !(lo < hi && grid_step > 0.0) {
        return Err(TowerError::InvalidParams(format!("bad window [{lo}, {hi}] / step {grid_step}")));
    }
    let m = tower.assemble_truncation(n, k)?;
    let eig = eigh_dense(&m.to_dense()).values;
    Ok(window_gap_of(tower, &eig, window, grid_step))
}

fn window_gap_of(tower: &Tower, eig: &[f64], window: (f64, f64), grid_step: f64) -> WindowGap {
    let (lo, hi) = window;
    let gap_out = eig
        .iter()
        .filter(|mu| **mu >= lo && **mu <= hi)
        .map(|&mu| tower.spec.distance_to_set(mu))
        .fold(0.0, f64::max);
    let Coverage { radius, empty } =
        covering_radius(&tower.spec, eig, window, grid_step).unwrap_or(Coverage { radius: 0.0, empty: true });
    if empty {
        WindowGap { gap_out: 0.0, gap_in: 0.0, empty: true }
    } else {
        WindowGap { gap_out, gap_in: radius, empty }
    }
}

/// Finite Weyl/Hausdorff check: `d_H(σ(A+E), σ(A)) <= ||E||` together with
/// the sorted pairing bound `max_k |λ_k(A+E) - λ_k(A)| <= ||E||`.
pub fn weyl_check(a: &SymmetricMatrix, e: &SymmetricMatrix) -> Check {
    if a.order() != e.order() {
        return Check {
            name: "weyl".into(),
            pass: false,
            measured: f64::NAN,
            bound: f64::NAN,
            context: format!("order mismatch {} vs {}", a.order(), e.order()),
        };
    }
    weyl_check_dense(&a.to_dense(), &e.to_dense())
}

pub fn weyl_check_dense(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Check {
    let base = eigh_dense(a).values;
    let moved = eigh_dense(&(a + e)).values;
    let norm = op_norm_dense(e);
    let dh = hausdorff(&moved, &base).expect("nonempty spectra");
    let paired = moved.iter().zip(&base).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Check {
        name: "weyl".into(),
        pass: dh <= norm + EIG_SLACK && paired <= norm + EIG_SLACK,
        measured: paired,
        bound: norm,
        context: format!("hausdorff {dh:e}, sorted pairing {paired:e}"),
    }
}
