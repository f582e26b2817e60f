//! Ten-metric evaluation of a predicted graph against its target: edge
//! error, seven node centralities, clustering and a Laplacian distance.
//!
//! Conventions:
//! - centrality errors are mean absolute per-node differences;
//! - shortest paths use edge length `1/w`;
//! - degree is strength over `n-1`, betweenness is normalized by the pair
//!   count `(n-1)(n-2)/2`, eigenvector and Katz vectors have unit L2 norm,
//!   PageRank sums to one.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{format_sig9, WeightedGraph};
use crate::model::DecodedGraph;

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 1000;
pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-12;
pub const PAGERANK_MAX_ITER: usize = 10_000;
pub const KATZ_ALPHA: f64 = 0.1;
pub const KATZ_BETA: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("graphs have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("katz alpha {alpha} is not below 1/lambda_max = {}", 1.0 / lambda_max)]
    AlphaTooLarge { alpha: f64, lambda_max: f64 },
    #[error("matrix is singular")]
    SingularMatrix,
}

fn same_size(a: &WeightedGraph, b: &WeightedGraph) -> Result<(), MetricError> {
    if a.n() != b.n() {
        return Err(MetricError::SizeMismatch(a.n(), b.n()));
    }
    Ok(())
}

fn to_matrix(g: &WeightedGraph) -> DMatrix<f64> {
    DMatrix::from_row_slice(g.n(), g.n(), g.as_slice())
}

/// Mean absolute difference over the strict upper triangle.
pub fn mae_edges(pred: &WeightedGraph, target: &WeightedGraph) -> Result<f64, MetricError> {
    same_size(pred, target)?;
    let n = pred.n();
    if n < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += (pred.weight(i, j) - target.weight(i, j)).abs();
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Mean absolute difference of two equal-length vectors.
pub fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Node strength divided by `n - 1`.
pub fn degree_centrality(g: &WeightedGraph) -> Vec<f64> {
    let denom = (g.n().max(2) - 1) as f64;
    (0..g.n()).map(|i| g.strength(i) / denom).collect()
}

/// Brandes betweenness with edge length `1/w`.
pub fn betweenness_centrality(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let mut bc = vec![0.0; n];
    if n < 3 {
        return bc;
    }
    let length = |u: usize, v: usize| 1.0 / g.weight(u, v);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);

    for s in 0..n {
        let mut dist = vec![f64::INFINITY; n];
        let mut sigma = vec![0.0f64; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        dist[s] = 0.0;
        sigma[s] = 1.0;
        // dense Dijkstra; n is small
        loop {
            let mut u = usize::MAX;
            for v in 0..n {
                if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            order.push(u);
            for (v, _) in g.neighbors(u) {
                if done[v] {
                    continue;
                }
                let alt = dist[u] + length(u, v);
                if dist[v].is_finite() && close(alt, dist[v]) {
                    sigma[v] += sigma[u];
                    preds[v].push(u);
                } else if alt < dist[v] {
                    dist[v] = alt;
                    sigma[v] = sigma[u];
                    preds[v] = vec![u];
                }
            }
        }
        let mut delta = vec![0.0; n];
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both ends
    let scale = 0.5 / (((n - 1) * (n - 2)) as f64 / 2.0);
    bc.iter_mut().for_each(|b| *b *= scale);
    bc
}

/// Dominant eigenvector by power iteration on `A + I`, unit L2 norm.
pub fn eigenvector_centrality(g: &WeightedGraph) -> Result<Vec<f64>, MetricError> {
    let n = g.n();
    if g.edge_count() == 0 {
        return Err(MetricError::NoConvergence(0));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..EIGEN_MAX_ITER {
        let mut next: Vec<f64> = (0..n)
            .map(|i| x[i] + g.row(i).iter().zip(&x).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(MetricError::NoConvergence(0));
        }
        next.iter_mut().for_each(|v| *v /= norm);
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if change < EIGEN_TOL {
            return Ok(x);
        }
    }
    Err(MetricError::NoConvergence(EIGEN_MAX_ITER))
}

/// Connected components over positive-weight edges, largest first (ties by
/// smallest member id). Members are sorted.
pub fn connected_components(g: &WeightedGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(u) = stack.pop() {
            comp.push(u);
            for (v, _) in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// Information centrality with the component it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationCentrality {
    pub scores: Vec<f64>,
    /// True when the graph was disconnected and only the largest component
    /// (or components, when several tie) was scored.
    pub used_largest_component: bool,
}

/// Stephenson–Zelen information centrality from `C = (L + J)^-1`:
/// `1 / (c_ii + (tr C - 2 sum_j c_ij) / n)`. Disconnected graphs are scored
/// on their largest component; other nodes get 0. Components tied for
/// largest are each scored, which keeps the result independent of labels.
pub fn information_centrality(g: &WeightedGraph) -> Result<InformationCentrality, MetricError> {
    let comps = connected_components(g);
    let mut scores = vec![0.0; g.n()];
    let used_largest_component = comps.len() > 1;
    let k = comps[0].len();
    if k >= 2 {
        for comp in comps.iter().take_while(|c| c.len() == k) {
            score_component(g, comp, &mut scores)?;
        }
    }
    Ok(InformationCentrality {
        scores,
        used_largest_component,
    })
}

fn score_component(
    g: &WeightedGraph,
    comp: &[usize],
    scores: &mut [f64],
) -> Result<(), MetricError> {
    let k = comp.len();
    let mut m = DMatrix::from_element(k, k, 1.0);
    for (a, &u) in comp.iter().enumerate() {
        for (b, &v) in comp.iter().enumerate() {
            if a != b {
                m[(a, b)] -= g.weight(u, v);
            }
        }
        m[(a, a)] += comp.iter().map(|&v| g.weight(u, v)).sum::<f64>();
    }
    let c = m.try_inverse().ok_or(MetricError::SingularMatrix)?;
    let trace = c.trace();
    for (a, &u) in comp.iter().enumerate() {
        let row_sum: f64 = c.row(a).iter().sum();
        let denom = c[(a, a)] + (trace - 2.0 * row_sum) / k as f64;
        if denom <= 0.0 || !denom.is_finite() {
            return Err(MetricError::SingularMatrix);
        }
        scores[u] = 1.0 / denom;
    }
    Ok(())
}

/// Weighted PageRank; dangling nodes spread their mass uniformly.
pub fn pagerank(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let d = PAGERANK_DAMPING;
    let strength: Vec<f64> = (0..n).map(|i| g.strength(i)).collect();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&i| strength[i] == 0.0).map(|i| x[i]).sum();
        let base = (d * dangling + (1.0 - d)) / n as f64;
        let mut next = vec![base; n];
        for i in 0..n {
            if strength[i] == 0.0 {
                continue;
            }
            let share = d * x[i] / strength[i];
            for (j, w) in g.neighbors(i) {
                next[j] += share * w;
            }
        }
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < PAGERANK_TOL {
            break;
        }
    }
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

/// Largest eigenvalue magnitude of the (symmetric) adjacency matrix.
pub fn spectral_radius(g: &WeightedGraph) -> f64 {
    SymmetricEigen::new(to_matrix(g))
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Solves `(I - alpha A) x = beta 1` and normalizes to unit L2 norm.
pub fn katz_centrality(g: &WeightedGraph) -> Result<Vec<f64>, MetricError> {
    let n = g.n();
    let lambda_max = spectral_radius(g);
    if KATZ_ALPHA * lambda_max >= 1.0 {
        return Err(MetricError::AlphaTooLarge {
            alpha: KATZ_ALPHA,
            lambda_max,
        });
    }
    let system = DMatrix::<f64>::identity(n, n) - to_matrix(g) * KATZ_ALPHA;
    let rhs = DVector::from_element(n, KATZ_BETA);
    let x = system.lu().solve(&rhs).ok_or(MetricError::SingularMatrix)?;
    let norm = x.norm();
    Ok(x.iter().map(|v| v / norm).collect())
}

/// Laplacian energy `sum_i s_i^2 + 2 sum_{i<j} w_ij^2`.
pub fn laplacian_energy(g: &WeightedGraph) -> f64 {
    let n = g.n();
    let strengths: f64 = (0..n).map(|i| g.strength(i).powi(2)).sum();
    let squares: f64 = g.as_slice().iter().map(|w| w * w).sum();
    strengths + squares
}

/// Relative energy drop when each node is deleted.
pub fn laplacian_centrality(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let energy = laplacian_energy(g);
    if energy == 0.0 {
        return vec![0.0; n];
    }
    let s: Vec<f64> = (0..n).map(|i| g.strength(i)).collect();
    (0..n)
        .map(|i| {
            // drop = s_i^2 + sum_k (2 s_k w_ik + w_ik^2)
            let row = g.row(i);
            let drop = s[i] * s[i]
                + row
                    .iter()
                    .zip(&s)
                    .map(|(w, sk)| 2.0 * sk * w + w * w)
                    .sum::<f64>();
            drop / energy
        })
        .collect()
}

/// Weighted clustering (geometric mean of normalized triangle weights).
pub fn clustering_coefficients(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let max = g.max_weight();
    if max == 0.0 {
        return vec![0.0; n];
    }
    let cube_root = DMatrix::from_row_slice(n, n, g.as_slice()).map(|w| (w / max).cbrt());
    let cubed = &cube_root * &cube_root * &cube_root;
    (0..n)
        .map(|i| {
            let k = g.degree(i);
            if k < 2 {
                0.0
            } else {
                cubed[(i, i)] / (k * (k - 1)) as f64
            }
        })
        .collect()
}

pub fn clustering_difference(
    pred: &WeightedGraph,
    target: &WeightedGraph,
) -> Result<f64, MetricError> {
    same_size(pred, target)?;
    Ok(mean_abs_diff(
        &clustering_coefficients(pred),
        &clustering_coefficients(target),
    ))
}

/// Combinatorial Laplacian `diag(strength) - A`.
pub fn laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let a = to_matrix(g);
    let degrees = DVector::from_iterator(g.n(), (0..g.n()).map(|i| g.strength(i)));
    DMatrix::from_diagonal(&degrees) - a
}

pub fn laplacian_frobenius(
    pred: &WeightedGraph,
    target: &WeightedGraph,
) -> Result<f64, MetricError> {
    same_size(pred, target)?;
    Ok((laplacian(pred) - laplacian(target)).norm())
}

/// Which decoder output was scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    #[default]
    Fused,
    Raw,
}

impl std::str::FromStr for Which {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fused" => Ok(Which::Fused),
            "raw" => Ok(Which::Raw),
            other => Err(format!("unknown prediction kind {other:?} (fused|raw)")),
        }
    }
}

impl std::fmt::Display for Which {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Which::Fused => "fused",
            Which::Raw => "raw",
        })
    }
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "mae",
    "mae_deg",
    "mae_bc",
    "mae_ec",
    "mae_ic",
    "mae_pr",
    "mae_katz",
    "mae_lap",
    "clust_diff",
    "lap_fro",
];

/// Scores for one predicted/target pair. A metric that could not be
/// computed is NaN and named in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mae: f64,
    pub mae_deg: f64,
    pub mae_bc: f64,
    pub mae_ec: f64,
    pub mae_ic: f64,
    pub mae_pr: f64,
    pub mae_katz: f64,
    pub mae_lap: f64,
    pub clust_diff: f64,
    pub lap_fro: f64,
    pub which: Which,
    pub flags: Vec<String>,
}

impl MetricReport {
    /// Values in report column order.
    pub fn values(&self) -> [f64; 10] {
        [
            self.mae,
            self.mae_deg,
            self.mae_bc,
            self.mae_ec,
            self.mae_ic,
            self.mae_pr,
            self.mae_katz,
            self.mae_lap,
            self.clust_diff,
            self.lap_fro,
        ]
    }

    pub fn csv_header() -> String {
        format!("id,{},flags", REPORT_COLUMNS.join(","))
    }

    pub fn csv_row(&self, id: &str) -> String {
        let mut row = id.to_string();
        for v in self.values() {
            row.push(',');
            if v.is_nan() {
                row.push_str("nan");
            } else {
                row.push_str(&format_sig9(v));
            }
        }
        row.push(',');
        row.push_str(&self.flags.join(";"));
        row
    }
}

/// Mean and sample standard deviation over finite values.
fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Per-pair rows followed by a `mean±std` summary row (4 decimals).
pub fn report_csv(rows: &[(String, MetricReport)]) -> String {
    let mut out = MetricReport::csv_header();
    out.push('\n');
    for (id, r) in rows {
        out.push_str(&r.csv_row(id));
        out.push('\n');
    }
    out.push_str("mean±std");
    for c in 0..REPORT_COLUMNS.len() {
        let (m, s) = mean_std(rows.iter().map(|(_, r)| r.values()[c]));
        if m.is_nan() {
            out.push_str(",nan");
        } else {
            write!(out, ",{m:.4}±{s:.4}").unwrap();
        }
    }
    let flagged = rows.iter().filter(|(_, r)| !r.flags.is_empty()).count();
    if flagged > 0 {
        write!(out, ",flagged={flagged}").unwrap();
    } else {
        out.push(',');
    }
    out.push('\n');
    out
}

/// All ten metrics for a prediction graph against its target.
pub fn evaluate_graphs(
    pred: &WeightedGraph,
    target: &WeightedGraph,
) -> Result<MetricReport, MetricError> {
    same_size(pred, target)?;
    let mut flags = Vec::new();
    let mut centrality_mae =
        |name: &str, f: &dyn Fn(&WeightedGraph) -> Result<Vec<f64>, MetricError>| match (
            f(pred),
            f(target),
        ) {
            (Ok(a), Ok(b)) => mean_abs_diff(&a, &b),
            (p, t) => {
                if let Err(e) = p {
                    flags.push(format!("{name}_pred:{}", flag_code(&e)));
                }
                if let Err(e) = t {
                    flags.push(format!("{name}_target:{}", flag_code(&e)));
                }
                f64::NAN
            }
        };
    let mae_deg = centrality_mae("deg", &|g| Ok(degree_centrality(g)));
    let mae_bc = centrality_mae("bc", &|g| Ok(betweenness_centrality(g)));
    let mae_ec = centrality_mae("ec", &eigenvector_centrality);
    let mae_pr = centrality_mae("pr", &|g| Ok(pagerank(g)));
    let mae_katz = centrality_mae("katz", &katz_centrality);
    let mae_lap = centrality_mae("lap", &|g| Ok(laplacian_centrality(g)));

    let mae_ic = match (information_centrality(pred), information_centrality(target)) {
        (Ok(a), Ok(b)) => {
            if a.used_largest_component {
                flags.push("ic_pred:largest_component".into());
            }
            if b.used_largest_component {
                flags.push("ic_target:largest_component".into());
            }
            mean_abs_diff(&a.scores, &b.scores)
        }
        (p, t) => {
            for (side, r) in [("pred", p), ("target", t)] {
                if let Err(e) = r {
                    flags.push(format!("ic_{side}:{}", flag_code(&e)));
                }
            }
            f64::NAN
        }
    };

    Ok(MetricReport {
        mae: mae_edges(pred, target)?,
        mae_deg,
        mae_bc,
        mae_ec,
        mae_ic,
        mae_pr,
        mae_katz,
        mae_lap,
        clust_diff: clustering_difference(pred, target)?,
        lap_fro: laplacian_frobenius(pred, target)?,
        which: Which::Fused,
        flags,
    })
}

fn flag_code(e: &MetricError) -> &'static str {
    match e {
        MetricError::SizeMismatch(..) => "size",
        MetricError::NoConvergence(_) => "no_convergence",
        MetricError::AlphaTooLarge { .. } => "alpha_too_large",
        MetricError::SingularMatrix => "singular",
    }
}

/// Scores either the fused or the raw weight output of a decoded graph.
pub fn evaluate_all(
    pred: &DecodedGraph,
    target: &WeightedGraph,
    which: Which,
) -> Result<MetricReport, MetricError> {
    let graph = match which {
        Which::Fused => pred.fused.clone(),
        Which::Raw => pred.raw().map_err(|_| MetricError::SingularMatrix)?,
    };
    let mut report = evaluate_graphs(&graph, target)?;
    report.which = which;
    Ok(report)
}
