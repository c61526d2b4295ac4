//! Labeled graphs on vertices `1..=n` and the countable families whose
//! induced prefixes feed the tower construction.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unordered edge stored as `(i, j)` with `1 <= i < j`.
pub type Edge = (usize, usize);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range 1..={n}")]
    OutOfRange { vertex: usize, n: usize },
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("unknown graph family `{0}`")]
    UnknownFamily(String),
    #[error("unknown tail rule `{0}` (expected isolated or path-continue)")]
    UnknownTail(String),
}

/// A finite simple graph with 1-based vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Graph {
    n_vertices: usize,
    edges: BTreeSet<Edge>,
}

impl Graph {
    pub fn new(n_vertices: usize) -> Result<Self, GraphError> {
        if n_vertices == 0 {
            return Err(GraphError::Empty);
        }
        Ok(Self { n_vertices, edges: BTreeSet::new() })
    }

    pub fn from_edges<I>(n_vertices: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Edge>,
    {
        let mut g = Self::new(n_vertices)?;
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Inserts the edge `{i, j}` in either orientation.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        for v in [i, j] {
            if v == 0 || v > self.n_vertices {
                return Err(GraphError::OutOfRange { vertex: v, n: self.n_vertices });
            }
        }
        self.edges.insert((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Induced subgraph on vertices `1..=n`.
    pub fn restrict(&self, n: usize) -> Result<Self, GraphError> {
        let n = n.min(self.n_vertices);
        let mut g = Self::new(n)?;
        g.edges = self.edges.iter().copied().filter(|&(_, j)| j <= n).collect();
        Ok(g)
    }

    /// Parses the edge-list format: vertex count on the first line, then one
    /// `i j` pair per line. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut graph: Option<Graph> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| GraphError::Parse { line: line_no, msg };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match graph.as_mut() {
                None => {
                    if tokens.len() != 1 {
                        return Err(err(format!("expected vertex count, got `{line}`")));
                    }
                    let n: usize = tokens[0]
                        .parse()
                        .map_err(|_| err(format!("invalid vertex count `{}`", tokens[0])))?;
                    graph = Some(Graph::new(n).map_err(|e| err(e.to_string()))?);
                }
                Some(g) => {
                    if tokens.len() != 2 {
                        return Err(err(format!("expected `i j`, got `{line}`")));
                    }
                    let parse_v =
                        |t: &str| t.parse::<usize>().map_err(|_| err(format!("invalid vertex `{t}`")));
                    let (i, j) = (parse_v(tokens[0])?, parse_v(tokens[1])?);
                    g.add_edge(i, j).map_err(|e| err(e.to_string()))?;
                }
            }
        }
        graph.ok_or(GraphError::Parse { line: 1, msg: "missing vertex count".into() })
    }

    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.n_vertices);
        for (i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// How an explicit finite graph continues past its last vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailRule {
    Isolated,
    PathContinue,
}

impl FromStr for TailRule {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isolated" => Ok(Self::Isolated),
            "path-continue" => Ok(Self::PathContinue),
            other => Err(GraphError::UnknownTail(other.to_string())),
        }
    }
}

/// A countable graph on vertices `1, 2, ...`, given as a rule for adjacency.
///
/// Every family decides adjacency of `{i, j}` from the pair alone, so
/// `prefix(n)` is always the induced subgraph of `prefix(n + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphFamily {
    Path,
    /// Star centered at vertex 1.
    Star,
    Complete,
    Empty,
    /// Heap-ordered binary tree: the parent of `v >= 2` is `v / 2`.
    BinaryTree,
    Random {
        seed: u64,
        edge_probability: f64,
    },
    Explicit {
        graph: Graph,
        tail: TailRule,
    },
}

impl GraphFamily {
    /// Builds a family from its CLI name.
    pub fn from_name(name: &str, seed: u64, edge_probability: f64) -> Result<Self, GraphError> {
        Ok(match name {
            "path" => Self::Path,
            "star" => Self::Star,
            "complete" => Self::Complete,
            "empty" => Self::Empty,
            "binary_tree" | "binary-tree" => Self::BinaryTree,
            "random" => Self::Random { seed, edge_probability },
            other => return Err(GraphError::UnknownFamily(other.to_string())),
        })
    }

    /// Adjacency of `i < j` in the infinite graph.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let (i, j) = (i.min(j), i.max(j));
        if i == j || i == 0 {
            return false;
        }
        match self {
            Self::Path => j == i + 1,
            Self::Star => i == 1,
            Self::Complete => true,
            Self::Empty => false,
            Self::BinaryTree => j / 2 == i,
            Self::Random { seed, edge_probability } => {
                pair_uniform(*seed, i as u64, j as u64) < *edge_probability
            }
            Self::Explicit { graph, tail } => {
                if j <= graph.n_vertices() {
                    graph.has_edge(i, j)
                } else {
                    match tail {
                        TailRule::Isolated => false,
                        TailRule::PathContinue => j == i + 1,
                    }
                }
            }
        }
    }

    /// The induced prefix `G_n` on vertices `1..=n`.
    pub fn prefix(&self, n: usize) -> Graph {
        let n = n.max(1);
        let mut g = Graph::new(n).expect("n >= 1");
        for j in 2..=n {
            for (a, b) in self.new_edges_at(j) {
                g.edges.insert((a, b));
            }
        }
        g
    }

    /// Edges of `G_n` that are not in `G_{n-1}`; all are incident to `n`.
    pub fn new_edges_at(&self, n: usize) -> Vec<Edge> {
        match self {
            Self::Path => {
                if n >= 2 {
                    vec![(n - 1, n)]
                } else {
                    Default::default()
                }
            }
            Self::Star => {
                if n >= 2 {
                    vec![(1, n)]
                } else {
                    Default::default()
                }
            }
            Self::BinaryTree => {
                if n >= 2 {
                    vec![(n / 2, n)]
                } else {
                    Default::default()
                }
            }
            Self::Empty => Vec::new(),
            _ => (1..n).filter(|&i| self.adjacent(i, n)).map(|i| (i, n)).collect(),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform value in `[0, 1)` determined by `(seed, i, j)` alone.
fn pair_uniform(seed: u64, i: u64, j: u64) -> f64 {
    let h = splitmix64(splitmix64(splitmix64(seed) ^ i) ^ j.rotate_left(32));
    (h >> 11) as f64 / (1u64 << 53) as f64
}
