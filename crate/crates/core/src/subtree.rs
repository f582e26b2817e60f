//! Entropy-guided root selection and k-hop BFS tree extraction.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedGraph;

#[derive(Debug, Error, PartialEq)]
pub enum SubtreeError {
    #[error("requested {m} roots but the graph has only {n} nodes")]
    MTooLarge { m: usize, n: usize },
    #[error("at least one root is required")]
    ZeroRoots,
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("root {root} out of range for {n} nodes")]
    RootOutOfRange { root: usize, n: usize },
}

/// How a node's local distribution is scored for root selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyStrategy {
    /// Shannon entropy of incident edge weights normalized to a distribution.
    #[default]
    EdgeWeight,
}

/// Shannon entropy (nats) of the weight-proportional distribution over the
/// positive-weight neighbors of `v`. Zero for nodes with at most one neighbor.
pub fn node_entropy(g: &WeightedGraph, v: usize) -> f64 {
    let (count, total) = g
        .neighbors(v)
        .fold((0usize, 0.0), |(c, s), (_, w)| (c + 1, s + w));
    if count <= 1 {
        return 0.0;
    }
    let h: f64 = g
        .neighbors(v)
        .map(|(_, w)| {
            let p = w / total;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Per-node scores and the node order they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootRanking {
    pub scores: Vec<f64>,
    /// Node ids by descending score, ties by ascending id.
    pub order: Vec<usize>,
}

impl RootRanking {
    pub fn compute(g: &WeightedGraph, strategy: EntropyStrategy) -> Self {
        let scores: Vec<f64> = match strategy {
            EntropyStrategy::EdgeWeight => (0..g.n()).map(|v| node_entropy(g, v)).collect(),
        };
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { scores, order }
    }

    pub fn top(&self, m: usize) -> &[usize] {
        &self.order[..m.min(self.order.len())]
    }
}

/// The `m` highest-entropy nodes.
pub fn select_roots(g: &WeightedGraph, m: usize) -> Result<Vec<usize>, SubtreeError> {
    check_m(g, m)?;
    Ok(RootRanking::compute(g, EntropyStrategy::EdgeWeight)
        .top(m)
        .to_vec())
}

fn check_m(g: &WeightedGraph, m: usize) -> Result<(), SubtreeError> {
    if m == 0 {
        return Err(SubtreeError::ZeroRoots);
    }
    if m > g.n() {
        return Err(SubtreeError::MTooLarge { m, n: g.n() });
    }
    Ok(())
}

/// A rooted BFS tree. `nodes[0]` is the root; the rest follow BFS order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtree {
    pub root: usize,
    pub nodes: Vec<usize>,
    /// `(parent, child, weight)` triples, one per non-root node.
    pub edges: Vec<(usize, usize, f64)>,
    pub depth: usize,
}

impl Subtree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of a graph node within `nodes`.
    pub fn local_index(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|&v| v == node)
    }

    /// Weighted tree adjacency over local indices (`nodes` order), row-major.
    pub fn local_adjacency(&self) -> Vec<f64> {
        let k = self.nodes.len();
        let mut a = vec![0.0; k * k];
        for &(p, c, w) in &self.edges {
            let (pi, ci) = (
                self.local_index(p).expect("parent in tree"),
                self.local_index(c).expect("child in tree"),
            );
            a[pi * k + ci] = w;
            a[ci * k + pi] = w;
        }
        a
    }

    /// Checks the tree invariants against the graph it was extracted from.
    pub fn check(&self, g: &WeightedGraph) -> Result<(), String> {
        if self.nodes.first() != Some(&self.root) {
            return Err("root is not first".into());
        }
        if self.edges.len() + 1 != self.nodes.len() {
            return Err(format!(
                "{} edges for {} nodes",
                self.edges.len(),
                self.nodes.len()
            ));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.nodes.iter().all(|v| seen.insert(*v)) {
            return Err("duplicate node".into());
        }
        // union-find over local indices
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b, w) in &self.edges {
            if g.weight(a, b) != w || w <= 0.0 {
                return Err(format!("edge ({a},{b}) weight {w} not in graph"));
            }
            let (ia, ib) = match (self.local_index(a), self.local_index(b)) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err(format!("edge ({a},{b}) leaves the node set")),
            };
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            if ra == rb {
                return Err(format!("edge ({a},{b}) closes a cycle"));
            }
            parent[ra] = rb;
        }
        // hop distance from root along tree edges
        let mut hops = vec![usize::MAX; self.nodes.len()];
        hops[0] = 0;
        for &(p, c, _) in &self.edges {
            let (pi, ci) = (self.local_index(p).unwrap(), self.local_index(c).unwrap());
            if hops[pi] == usize::MAX {
                return Err(format!("parent {p} precedes its own discovery"));
            }
            hops[ci] = hops[pi] + 1;
        }
        if hops.iter().any(|&h| h > self.depth) {
            return Err("node beyond depth".into());
        }
        Ok(())
    }
}

/// BFS tree of depth at most `k` from `root` over positive-weight edges.
/// Neighbors are visited in ascending id; each node keeps its first parent.
pub fn extract_khop_tree(
    g: &WeightedGraph,
    root: usize,
    k: usize,
) -> Result<Subtree, SubtreeError> {
    if root >= g.n() {
        return Err(SubtreeError::RootOutOfRange { root, n: g.n() });
    }
    if k == 0 {
        return Err(SubtreeError::ZeroHops);
    }
    let mut depth = vec![usize::MAX; g.n()];
    depth[root] = 0;
    let mut nodes = vec![root];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        if depth[u] == k {
            continue;
        }
        for (v, w) in g.neighbors(u) {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                nodes.push(v);
                edges.push((u, v, w));
                queue.push_back(v);
            }
        }
    }
    Ok(Subtree {
        root,
        nodes,
        edges,
        depth: k,
    })
}

/// Extracts one subtree per selected root, in ranking order.
pub fn extract_all(g: &WeightedGraph, m: usize, k: usize) -> Result<Vec<Subtree>, SubtreeError> {
    select_roots(g, m)?
        .into_iter()
        .map(|r| extract_khop_tree(g, r, k))
        .collect()
}
