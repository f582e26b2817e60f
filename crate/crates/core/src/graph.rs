//! Dense weighted undirected graphs, their invariants, and the CSV
//! interchange format.
//!
//! A [`WeightedGraph`] is an `n x n` symmetric, nonnegative adjacency
//! matrix with a zero diagonal. Nodes carry no attributes; each adjacency
//! row doubles as that node's feature vector.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("matrix is not square: row {row} has {found} entries, expected {expected}")]
    NonSquare {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("matrix is not symmetric at ({i},{j}): |a_ij - a_ji| = {delta}")]
    NonSymmetric { i: usize, j: usize, delta: f64 },
    #[error("negative weight at ({i},{j})")]
    NegativeWeight { i: usize, j: usize },
    #[error("nonzero diagonal at node {0}")]
    NonzeroDiagonal(usize),
    #[error("non-finite weight at ({i},{j})")]
    NonFinite { i: usize, j: usize },
    #[error("parse error on line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("graph is empty")]
    Empty,
    #[error("size mismatch: {0} vs {1} nodes")]
    SizeMismatch(usize, usize),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GraphError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        GraphError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// A single broken invariant, reported by [`WeightedGraph::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonSymmetric { i: usize, j: usize, delta: f64 },
    NegativeWeight { i: usize, j: usize },
    NonzeroDiagonal(usize),
    NonFinite { i: usize, j: usize },
}

impl From<Violation> for GraphError {
    fn from(v: Violation) -> Self {
        match v {
            Violation::NonSymmetric { i, j, delta } => GraphError::NonSymmetric { i, j, delta },
            Violation::NegativeWeight { i, j } => GraphError::NegativeWeight { i, j },
            Violation::NonzeroDiagonal(i) => GraphError::NonzeroDiagonal(i),
            Violation::NonFinite { i, j } => GraphError::NonFinite { i, j },
        }
    }
}

/// Symmetric nonnegative weighted adjacency matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<f64>,
}

impl fmt::Debug for WeightedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "WeightedGraph(n={})", self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl WeightedGraph {
    /// Builds a graph from a row-major buffer, rejecting the first violation.
    pub fn from_dense(n: usize, adj: Vec<f64>) -> Result<Self, GraphError> {
        let g = Self::from_dense_unchecked(n, adj)?;
        if let Some(v) = g.validate().into_iter().next() {
            return Err(v.into());
        }
        Ok(g)
    }

    /// Builds a graph without checking invariants; only the shape is checked.
    /// Use [`validate`](Self::validate) to inspect the result.
    pub fn from_dense_unchecked(n: usize, adj: Vec<f64>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if adj.len() != n * n {
            return Err(GraphError::NonSquare {
                row: adj.len() / n,
                found: adj.len() % n,
                expected: n,
            });
        }
        Ok(Self { n, adj })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let n = rows.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::NonSquare {
                    row: r,
                    found: row.len(),
                    expected: n,
                });
            }
            adj.extend_from_slice(row);
        }
        Self::from_dense(n, adj)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "graph must have at least one node");
        Self {
            n,
            adj: vec![0.0; n * n],
        }
    }

    /// Builds a graph from an undirected edge list. Later duplicates overwrite.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut adj = vec![0.0; n * n];
        for &(i, j, w) in edges {
            adj[i * n + j] = w;
            adj[j * n + i] = w;
        }
        Self::from_dense(n, adj)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.adj[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.adj
    }

    /// Neighbors of `v` with strictly positive weight, ascending by id.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(v)
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    pub fn strength(&self, v: usize) -> f64 {
        self.row(v).iter().sum()
    }

    /// Number of undirected edges with positive weight.
    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .map(|i| {
                ((i + 1)..self.n)
                    .filter(|&j| self.weight(i, j) > 0.0)
                    .count()
            })
            .sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.adj.iter().copied().fold(0.0, f64::max)
    }

    /// Returns a copy with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            adj: self.adj.iter().map(|w| w * c).collect(),
        }
    }

    /// Relabels nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut adj = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                adj[perm[i] * n + perm[j]] = self.adj[i * n + j];
            }
        }
        Self { n, adj }
    }

    /// Every invariant violation, in row-major order. Symmetry is exact.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = self.adj[i * n + j];
                if !w.is_finite() {
                    out.push(Violation::NonFinite { i, j });
                    continue;
                }
                if i == j {
                    if w != 0.0 {
                        out.push(Violation::NonzeroDiagonal(i));
                    }
                    continue;
                }
                if w < 0.0 {
                    out.push(Violation::NegativeWeight { i, j });
                }
                if j > i {
                    let other = self.adj[j * n + i];
                    if other.is_finite() && w != other {
                        out.push(Violation::NonSymmetric {
                            i,
                            j,
                            delta: (w - other).abs(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Divides every weight by the maximum weight. Returns the graph and the
    /// divisor used (1.0 for an all-zero graph, which is returned unchanged).
    pub fn minmax_normalize(&self) -> (Self, f64) {
        let max = self.max_weight();
        if max <= 0.0 {
            return (self.clone(), 1.0);
        }
        (
            Self {
                n: self.n,
                adj: self.adj.iter().map(|w| w / max).collect(),
            },
            max,
        )
    }

    pub fn binarize(&self, eps: f64) -> BinaryGraph {
        BinaryGraph {
            n: self.n,
            adj: self.adj.iter().map(|&w| w > eps).collect(),
        }
    }

    /// Loads an `n x n` CSV matrix and validates it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| GraphError::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self, GraphError> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| GraphError::ParseError {
                            line: lineno + 1,
                            msg: format!("{tok:?}: {e}"),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn to_csv(&self) -> String {
        matrix_to_csv(self.n, self.n, &self.adj)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        write_text(path.as_ref(), &self.to_csv())
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), GraphError> {
    let mut f = fs::File::create(path).map_err(|e| GraphError::io(path, e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| GraphError::io(path, e))
}

/// Formats `x` with nine significant digits in plain decimal notation.
///
/// The output is a fixed point of format-then-parse, so files written here
/// load and re-save byte-identically.
pub fn format_sig9(x: f64) -> String {
    fn raw(x: f64) -> String {
        if x == 0.0 {
            return "0".to_string();
        }
        if !x.is_finite() {
            return format!("{x}");
        }
        let exp = x.abs().log10().floor() as i32;
        if !(-30..=30).contains(&exp) {
            return format!("{x:.8e}");
        }
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    }
    let first = raw(x);
    match first.parse::<f64>() {
        Ok(y) => raw(y),
        Err(_) => first,
    }
}

/// Writes a row-major matrix as CSV with [`format_sig9`] entries, LF endings.
pub fn matrix_to_csv(rows: usize, cols: usize, data: &[f64]) -> String {
    let mut out = String::with_capacity(rows * cols * 12);
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format_sig9(data[r * cols + c]));
        }
        out.push('\n');
    }
    out
}

/// 0/1 adjacency indicating edge existence.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryGraph {
    n: usize,
    adj: Vec<bool>,
}

impl fmt::Debug for BinaryGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryGraph(n={})", self.n)?;
        for i in 0..self.n {
            let row: String = (0..self.n)
                .map(|j| if self.has_edge(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

impl BinaryGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    /// Entries as 0.0/1.0, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.adj
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .map(|i| ((i + 1)..self.n).filter(|&j| self.has_edge(i, j)).count())
            .sum()
    }
}

/// A source graph and the target it should be mapped to.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPair {
    pub id: String,
    pub source: WeightedGraph,
    pub target: WeightedGraph,
}

impl GraphPair {
    pub fn new(
        id: impl Into<String>,
        source: WeightedGraph,
        target: WeightedGraph,
    ) -> Result<Self, GraphError> {
        if source.n() != target.n() {
            return Err(GraphError::SizeMismatch(source.n(), target.n()));
        }
        Ok(Self {
            id: id.into(),
            source,
            target,
        })
    }

    /// The reconstruction pair: target replaced by the source.
    pub fn self_supervised(&self) -> Self {
        Self {
            id: self.id.clone(),
            source: self.source.clone(),
            target: self.source.clone(),
        }
    }
}

/// Symmetric renormalized propagation matrix `D^-1/2 (A + I) D^-1/2`,
/// with `D = rowsum(A + I)`. `a` is a row-major `n x n` matrix.
pub fn normalize_adjacency(n: usize, a: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = a[i * n..(i + 1) * n].iter().sum::<f64>() + 1.0;
            1.0 / d.sqrt()
        })
        .collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let aij = a[i * n + j] + if i == j { 1.0 } else { 0.0 };
            out[i * n + j] = inv_sqrt[i] * aij * inv_sqrt[j];
        }
    }
    out
}

/// Reads `<root>/source/<id>.csv` and `<root>/target/<id>.csv`.
pub fn load_pair(root: &Path, id: &str) -> Result<GraphPair, GraphError> {
    let source = WeightedGraph::load(root.join("source").join(format!("{id}.csv")))?;
    let target = WeightedGraph::load(root.join("target").join(format!("{id}.csv")))?;
    GraphPair::new(id, source, target)
}
