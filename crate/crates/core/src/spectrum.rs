//! Closed infinite subsets of the real line built from a few piece kinds,
//! together with a deterministic enumeration of a dense sequence of
//! distinct points.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("finite set: at least one interval, ray or lattice piece is required")]
    FiniteSet,
    #[error("empty spectrum specification")]
    NoPieces,
    #[error("interval requires a < b, got [{0}, {1}] (use `point` for a single value)")]
    DegenerateInterval(f64, f64),
    #[error("lattice step must be positive, got {0}")]
    LatticeStep(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(f64),
    #[error("parse error at `{token}`: {msg}")]
    Parse { token: String, msg: String },
    #[error("window must satisfy lo < hi and grid_step > 0 (got [{lo}, {hi}], step {step})")]
    BadWindow { lo: f64, hi: f64, step: f64 },
}

/// One closed building block of a spectrum set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedPiece {
    Point {
        a: f64,
    },
    Interval {
        a: f64,
        b: f64,
    },
    /// `[a, +inf)`
    RayUp {
        a: f64,
    },
    /// `(-inf, b]`
    RayDown {
        b: f64,
    },
    /// `{c + k d : k = 0, 1, 2, ...}`
    Lattice {
        c: f64,
        d: f64,
    },
}

impl ClosedPiece {
    fn validate(&self) -> Result<(), SpectrumError> {
        let params: &[f64] = match self {
            Self::Point { a } | Self::RayUp { a } => &[*a],
            Self::RayDown { b } => &[*b],
            Self::Interval { a, b } => &[*a, *b],
            Self::Lattice { c, d } => &[*c, *d],
        };
        if let Some(&bad) = params.iter().find(|v| !v.is_finite()) {
            return Err(SpectrumError::NonFinite(bad));
        }
        match *self {
            Self::Interval { a, b } if a >= b => Err(SpectrumError::DegenerateInterval(a, b)),
            Self::Lattice { d, .. } if d <= 0.0 => Err(SpectrumError::LatticeStep(d)),
            _ => Ok(()),
        }
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self, Self::Point { .. })
    }

    /// Closest point of the piece to `x`.
    pub fn nearest(&self, x: f64) -> f64 {
        match *self {
            Self::Point { a } => a,
            Self::Interval { a, b } => x.clamp(a, b),
            Self::RayUp { a } => x.max(a),
            Self::RayDown { b } => x.min(b),
            Self::Lattice { c, d } => {
                if x <= c {
                    c
                } else {
                    c + ((x - c) / d).round() * d
                }
            }
        }
    }

    pub fn distance(&self, x: f64) -> f64 {
        (x - self.nearest(x)).abs()
    }

    fn cursor(&self) -> PieceCursor {
        PieceCursor { piece: *self, step: 0, fill: FillState::default() }
    }
}

impl fmt::Display for ClosedPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Point { a } => write!(f, "point {a}"),
            Self::Interval { a, b } => write!(f, "interval {a} {b}"),
            Self::RayUp { a } => write!(f, "rayup {a}"),
            Self::RayDown { b } => write!(f, "raydown {b}"),
            Self::Lattice { c, d } => write!(f, "lattice {c} {d}"),
        }
    }
}

/// A closed infinite set `Λ ⊂ ℝ`, the finite union of its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pieces: Vec<ClosedPiece>,
}

impl SpectrumSpec {
    pub fn new(pieces: Vec<ClosedPiece>) -> Result<Self, SpectrumError> {
        if pieces.is_empty() {
            return Err(SpectrumError::NoPieces);
        }
        for p in &pieces {
            p.validate()?;
        }
        if !pieces.iter().any(ClosedPiece::is_infinite) {
            return Err(SpectrumError::FiniteSet);
        }
        Ok(Self { pieces })
    }

    /// Parses the piece DSL: `point a`, `interval a b`, `rayup a`,
    /// `raydown b`, `lattice c d`. Pieces may be separated by newlines, `;`
    /// or a standalone `+`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SpectrumError> {
        let mut tokens = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split(|c: char| c.is_whitespace() || c == ';') {
                if !tok.is_empty() && tok != "+" {
                    tokens.push(tok);
                }
            }
        }
        let mut pieces = Vec::new();
        let mut it = tokens.into_iter();
        while let Some(kw) = it.next() {
            let mut num = || -> Result<f64, SpectrumError> {
                let t = it.next().ok_or_else(|| SpectrumError::Parse {
                    token: kw.to_string(),
                    msg: "missing argument".into(),
                })?;
                // accept the unicode minus sign as well
                t.replace('\u{2212}', "-").parse::<f64>().map_err(|_| SpectrumError::Parse {
                    token: t.to_string(),
                    msg: "expected a number".into(),
                })
            };
            let piece = match kw.to_ascii_lowercase().as_str() {
                "point" => ClosedPiece::Point { a: num()? },
                "interval" => ClosedPiece::Interval { a: num()?, b: num()? },
                "rayup" => ClosedPiece::RayUp { a: num()? },
                "raydown" => ClosedPiece::RayDown { b: num()? },
                "lattice" => ClosedPiece::Lattice { c: num()?, d: num()? },
                _ => {
                    return Err(SpectrumError::Parse {
                        token: kw.to_string(),
                        msg: "unknown piece kind".into(),
                    })
                }
            };
            pieces.push(piece);
        }
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[ClosedPiece] {
        &self.pieces
    }

    /// Exact distance from `x` to the set.
    pub fn distance_to_set(&self, x: f64) -> f64 {
        self.pieces.iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min)
    }

    /// A closest point of the set to `x`.
    pub fn nearest_point(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.nearest(x))
            .min_by(|a, b| (x - a).abs().total_cmp(&(x - b).abs()))
            .expect("spec has at least one piece")
    }

    pub fn dense_enumerate(&self, count: usize) -> DenseSequence {
        DenseSequence { spec: self.clone(), terms: DenseIter::new(self).take(count).collect() }
    }

    pub fn dense_iter(&self) -> DenseIter {
        DenseIter::new(self)
    }
}

impl fmt::Display for SpectrumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pieces.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

impl FromStr for SpectrumSpec {
    type Err = SpectrumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Free function form of [`SpectrumSpec::dense_enumerate`].
pub fn dense_enumerate(spec: &SpectrumSpec, count: usize) -> DenseSequence {
    spec.dense_enumerate(count)
}

/// Finite prefix of the dense sequence of a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSequence {
    pub spec: SpectrumSpec,
    pub terms: Vec<f64>,
}

impl DenseSequence {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn covering_radius(&self, window: (f64, f64), grid_step: f64) -> Result<Coverage, SpectrumError> {
        covering_radius(&self.spec, &self.terms, window, grid_step)
    }
}

// Diagonal sweep over (cell, level) pairs for ray fill points.
#[derive(Debug, Clone, Default)]
struct FillState {
    round: u32,
    cell: u32,
    j: u64,
}

impl FillState {
    /// Next offset `cell + (2j - 1) / 2^level` inside the unit cells.
    fn next_offset(&mut self) -> f64 {
        if self.round == 0 {
            self.round = 1;
        }
        let level = self.round - self.cell;
        self.j += 1;
        let offset = self.cell as f64 + (2 * self.j - 1) as f64 / 2f64.powi(level as i32);
        if self.j == 1u64 << (level - 1) {
            self.j = 0;
            self.cell += 1;
            if self.cell == self.round {
                self.cell = 0;
                self.round += 1;
            }
        }
        offset
    }
}

#[derive(Debug, Clone)]
struct PieceCursor {
    piece: ClosedPiece,
    step: u64,
    fill: FillState,
}

impl PieceCursor {
    fn next(&mut self) -> Option<f64> {
        let s = self.step;
        self.step += 1;
        match self.piece {
            ClosedPiece::Point { a } => (s == 0).then_some(a),
            ClosedPiece::Interval { a, b } => match s {
                0 => Some(a),
                1 => Some(b),
                _ => {
                    // index k >= 0 among midpoints: level l holds 2^(l-1) points
                    let k = s - 2;
                    let level = 64 - (k + 1).leading_zeros();
                    if level > 52 {
                        return None;
                    }
                    let j = k + 2 - (1u64 << (level - 1));
                    Some(a + (b - a) * ((2 * j - 1) as f64 / 2f64.powi(level as i32)))
                }
            },
            ClosedPiece::RayUp { a } => Some(a + self.ray_offset(s)),
            ClosedPiece::RayDown { b } => Some(b - self.ray_offset(s)),
            ClosedPiece::Lattice { c, d } => Some(c + s as f64 * d),
        }
    }

    // Even steps walk outward over integers, odd steps fill unit cells.
    fn ray_offset(&mut self, s: u64) -> f64 {
        if s.is_multiple_of(2) {
            (s / 2) as f64
        } else {
            self.fill.next_offset()
        }
    }
}

/// Round-robin interleaving of the per-piece enumerations, dropping any term
/// that repeats an earlier one up to relative precision `1e-15`.
#[derive(Debug, Clone)]
pub struct DenseIter {
    cursors: Vec<Option<PieceCursor>>,
    turn: usize,
    seen: BTreeSet<OrderedFloat<f64>>,
}

const DUP_REL: f64 = 1e-15;

impl DenseIter {
    fn new(spec: &SpectrumSpec) -> Self {
        Self {
            cursors: spec.pieces.iter().map(|p| Some(p.cursor())).collect(),
            turn: 0,
            seen: BTreeSet::new(),
        }
    }

    fn is_duplicate(&self, x: f64) -> bool {
        let tol = DUP_REL * x.abs();
        self.seen
            .range(OrderedFloat(x - tol)..=OrderedFloat(x + tol))
            .any(|y| (y.0 - x).abs() <= DUP_REL * x.abs().max(y.0.abs()))
    }
}

impl Iterator for DenseIter {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let n = self.cursors.len();
        for _ in 0..n {
            let idx = self.turn;
            self.turn = (self.turn + 1) % n;
            while let Some(cursor) = self.cursors[idx].as_mut() {
                match cursor.next() {
                    None => {
                        self.cursors[idx] = None;
                        break;
                    }
                    Some(x) => {
                        let x = x + 0.0;
                        if !self.is_duplicate(x) {
                            self.seen.insert(OrderedFloat(x));
                            return Some(x);
                        }
                    }
                }
            }
        }
        None
    }
}

/// Result of a covering-radius query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub radius: f64,
    /// True when the window does not meet the set.
    pub empty: bool,
}

/// Largest distance from a sampled point of `Λ ∩ window` to the nearest of
/// `points`. The window is sampled by projecting a uniform grid onto `Λ` and
/// keeping projections that moved at most `grid_step` and stay in the window.
pub fn covering_radius(
    spec: &SpectrumSpec,
    points: &[f64],
    window: (f64, f64),
    grid_step: f64,
) -> Result<Coverage, SpectrumError> {
    let (lo, hi) = window;
    if !(lo < hi && grid_step > 0.0 && grid_step.is_finite() && lo.is_finite() && hi.is_finite()) {
        return Err(SpectrumError::BadWindow { lo, hi, step: grid_step });
    }
    let mut sorted: Vec<f64> = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cells = ((hi - lo) / grid_step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut radius: f64 = 0.0;
    let mut empty = true;
    for i in 0..=cells {
        let x = if i == cells { hi } else { lo + (hi - lo) * (i as f64 / cells as f64) };
        let p = spec.nearest_point(x);
        if (p - x).abs() > grid_step || p < lo || p > hi {
            continue;
        }
        empty = false;
        radius = radius.max(nearest_distance(&sorted, p));
    }
    Ok(Coverage { radius: if empty { 0.0 } else { radius }, empty })
}

/// Distance from `x` to the nearest entry of an ascending slice.
pub(crate) fn nearest_distance(sorted: &[f64], x: f64) -> f64 {
    let idx = sorted.partition_point(|&v| v < x);
    let mut best = f64::INFINITY;
    if idx < sorted.len() {
        best = best.min((sorted[idx] - x).abs());
    }
    if idx > 0 {
        best = best.min((x - sorted[idx - 1]).abs());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> SpectrumSpec {
        SpectrumSpec::parse(s).unwrap()
    }

    #[test]
    fn lattice_enumeration() {
        assert_eq!(spec("lattice 0 1").dense_enumerate(4).terms, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn interval_enumeration() {
        assert_eq!(
            spec("interval 0 1").dense_enumerate(8).terms,
            vec![0.0, 1.0, 0.5, 0.25, 0.75, 0.125, 0.375, 0.625]
        );
    }

    #[test]
    fn interleaving_skips_exhausted_pieces() {
        let seq = spec("interval 0 1\npoint 5").dense_enumerate(4);
        assert_eq!(seq.terms, vec![0.0, 5.0, 1.0, 0.5]);
        // brute-force membership and distinctness
        for (k, &t) in seq.terms.iter().enumerate() {
            assert_eq!(seq.spec.distance_to_set(t), 0.0);
            assert!(seq.terms[..k].iter().all(|&u| u != t));
        }
    }

    #[test]
    fn ray_enumeration_walks_out_and_fills() {
        let terms = spec("rayup 2").dense_enumerate(9).terms;
        assert_eq!(terms, vec![2.0, 2.5, 3.0, 2.25, 4.0, 2.75, 5.0, 3.5, 6.0]);
        let down = spec("raydown 0").dense_enumerate(5).terms;
        assert_eq!(down, vec![0.0, -0.5, -1.0, -0.25, -2.0]);
    }

    #[test]
    fn cross_piece_duplicates_are_dropped() {
        let seq = spec("interval 0 1; lattice 0 0.5").dense_enumerate(6);
        // lattice 0 and 0.5 and 1 collide with interval terms
        assert_eq!(seq.terms, vec![0.0, 0.5, 1.0, 1.5, 0.25, 2.0]);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(spec("interval 0 1").distance_to_set(2.0), 1.0);
        assert_eq!(spec("point 0; point 5; rayup 100").distance_to_set(3.0), 2.0);
        assert_eq!(spec("lattice 0 2").distance_to_set(3.5), 0.5);
        assert_eq!(spec("lattice 0 2").distance_to_set(-1.0), 1.0);
        assert_eq!(spec("raydown -1").distance_to_set(1.5), 2.5);
    }

    #[test]
    fn covering_radius_examples() {
        let s = spec("interval 0 1");
        let c = covering_radius(&s, &[0.0, 1.0], (0.0, 1.0), 1e-3).unwrap();
        assert!((c.radius - 0.5).abs() < 1e-12 && !c.empty);
        let c = covering_radius(&s, &[0.0, 1.0, 0.5], (0.0, 1.0), 1e-3).unwrap();
        assert!((c.radius - 0.25).abs() < 1e-12);
        let s = spec("lattice 0 1");
        let c = covering_radius(&s, &[0.0, 1.0, 2.0, 3.0], (0.0, 10.0), 1e-3).unwrap();
        assert_eq!(c.radius, 7.0);
    }

    #[test]
    fn covering_radius_empty_window() {
        let c = covering_radius(&spec("interval 0 1"), &[0.0], (3.0, 4.0), 1e-3).unwrap();
        assert_eq!(c, Coverage { radius: 0.0, empty: true });
        assert!(covering_radius(&spec("interval 0 1"), &[0.0], (1.0, 1.0), 1e-3).is_err());
    }

    #[test]
    fn parse_errors() {
        assert_eq!(SpectrumSpec::parse("point 3"), Err(SpectrumError::FiniteSet));
        assert!(SpectrumSpec::parse("point 3").unwrap_err().to_string().contains("finite set"));
        assert_eq!(SpectrumSpec::parse(""), Err(SpectrumError::NoPieces));
        assert!(matches!(SpectrumSpec::parse("interval 1 1"), Err(SpectrumError::DegenerateInterval(..))));
        assert!(matches!(SpectrumSpec::parse("lattice 0 0"), Err(SpectrumError::LatticeStep(_))));
        assert!(matches!(SpectrumSpec::parse("interval 0"), Err(SpectrumError::Parse { .. })));
        assert!(matches!(SpectrumSpec::parse("circle 0 1"), Err(SpectrumError::Parse { .. })));
        assert!(matches!(SpectrumSpec::parse("rayup nan"), Err(SpectrumError::NonFinite(_))));
    }

    #[test]
    fn parse_separators_and_display_roundtrip() {
        let s = spec("interval −1 1 + rayup 5");
        assert_eq!(s.pieces(), &[ClosedPiece::Interval { a: -1.0, b: 1.0 }, ClosedPiece::RayUp { a: 5.0 }]);
        assert_eq!(spec(&s.to_string()), s);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_piece() -> impl Strategy<Value = ClosedPiece> {
            prop_oneof![
                (-10.0..10.0f64).prop_map(|a| ClosedPiece::Point { a }),
                (-10.0..10.0f64, 0.01..5.0f64).prop_map(|(a, w)| ClosedPiece::Interval { a, b: a + w }),
                (-10.0..10.0f64).prop_map(|a| ClosedPiece::RayUp { a }),
                (-10.0..10.0f64).prop_map(|b| ClosedPiece::RayDown { b }),
                (-10.0..10.0f64, 0.1..3.0f64).prop_map(|(c, d)| ClosedPiece::Lattice { c, d }),
            ]
        }

        proptest! {
            #[test]
            fn terms_are_members_and_distinct(
                mut pieces in prop::collection::vec(arb_piece(), 1..4),
                n in 1usize..300,
            ) {
                pieces.push(ClosedPiece::Lattice { c: 0.0, d: 1.0 });
                let s = SpectrumSpec::new(pieces).unwrap();
                let seq = s.dense_enumerate(n);
                prop_assert_eq!(seq.len(), n);
                let mut sorted = seq.terms.clone();
                for &t in &seq.terms {
                    prop_assert!(s.distance_to_set(t) <= 1e-12 * (1.0 + t.abs()));
                }
                sorted.sort_by(f64::total_cmp);
                for w in sorted.windows(2) {
                    prop_assert!(w[1] - w[0] > DUP_REL * w[0].abs().max(w[1].abs()));
                }
                prop_assert_eq!(s.dense_enumerate(n), seq);
            }

            #[test]
            fn covering_radius_non_increasing(lo in -3.0..3.0f64, width in 0.5..5.0f64) {
                let s = SpectrumSpec::parse("interval -1 1; rayup 2; lattice -5 0.75").unwrap();
                let all = s.dense_enumerate(200).terms;
                let mut prev = f64::INFINITY;
                for n in [10, 25, 50, 100, 200] {
                    let c = covering_radius(&s, &all[..n], (lo, lo + width), width / 500.0).unwrap();
                    prop_assert!(c.radius <= prev);
                    prev = c.radius;
                }
            }
        }
    }
}
