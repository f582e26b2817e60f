//! Brute-force oracles and random inputs shared by the integration tests.
//! Every oracle here takes a different route from the library code.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subtreegen::WeightedGraph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with edge probability `p` and weights in `[0.05, 1]`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.05..=1.0)));
            }
        }
    }
    WeightedGraph::from_edges(n, &edges).unwrap()
}

/// Random connected graph: a shuffled spanning path plus extra edges.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> WeightedGraph {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut adj = vec![0.0; n * n];
    let mut put = |i: usize, j: usize, w: f64| {
        adj[i * n + j] = w;
        adj[j * n + i] = w;
    };
    for pair in order.windows(2) {
        put(pair[0], pair[1], rng.random_range(0.05..=1.0));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                put(i, j, rng.random_range(0.05..=1.0));
            }
        }
    }
    WeightedGraph::from_dense(n, adj).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Solves `m x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-14, "singular system");
        for r in col + 1..n {
            let f = m[r][col] / p;
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    x
}

pub fn strength(g: &WeightedGraph, i: usize) -> f64 {
    (0..g.n()).map(|j| g.weight(i, j)).sum()
}

pub fn oracle_degree(g: &WeightedGraph) -> Vec<f64> {
    (0..g.n())
        .map(|i| strength(g, i) / (g.n() - 1) as f64)
        .collect()
}

/// All simple paths from `s` to `t` as node lists.
fn simple_paths(g: &WeightedGraph, s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(
        g: &WeightedGraph,
        t: usize,
        path: &mut Vec<usize>,
        on: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        for v in 0..g.n() {
            if g.weight(u, v) > 0.0 && !on[v] {
                on[v] = true;
                path.push(v);
                walk(g, t, path, on, out);
                path.pop();
                on[v] = false;
            }
        }
    }
    let mut on = vec![false; g.n()];
    on[s] = true;
    let mut out = Vec::new();
    walk(g, t, &mut vec![s], &mut on, &mut out);
    out
}

/// Betweenness by enumerating every simple path; length of an edge is `1/w`.
pub fn oracle_betweenness(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let mut bc = vec![0.0; n];
    if n < 3 {
        return bc;
    }
    for s in 0..n {
        for t in s + 1..n {
            let paths = simple_paths(g, s, t);
            if paths.is_empty() {
                continue;
            }
            let len = |p: &Vec<usize>| {
                p.windows(2)
                    .map(|e| 1.0 / g.weight(e[0], e[1]))
                    .sum::<f64>()
            };
            let lengths: Vec<f64> = paths.iter().map(len).collect();
            let best = lengths.iter().copied().fold(f64::INFINITY, f64::min);
            let shortest: Vec<&Vec<usize>> = paths
                .iter()
                .zip(&lengths)
                .filter(|(_, &l)| (l - best).abs() <= 1e-9 * best.max(1.0))
                .map(|(p, _)| p)
                .collect();
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&v)).count();
                bc[v] += through as f64 / shortest.len() as f64;
            }
        }
    }
    let pairs = ((n - 1) * (n - 2)) as f64 / 2.0;
    bc.iter().map(|b| b / pairs).collect()
}

pub fn dense(g: &WeightedGraph) -> DMatrix<f64> {
    DMatrix::from_row_slice(g.n(), g.n(), g.as_slice())
}

/// Perron vector from a symmetric eigensolver (connected graphs only).
pub fn oracle_eigenvector(g: &WeightedGraph) -> Vec<f64> {
    let eig = SymmetricEigen::new(dense(g));
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top);
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    let norm = v.norm();
    v.iter().map(|x| sign * x / norm).collect()
}

/// `||A x - λ_max x||_inf` with `λ_max` from the eigensolver.
pub fn eigen_residual(g: &WeightedGraph, x: &[f64]) -> f64 {
    let lambda = SymmetricEigen::new(dense(g)).eigenvalues.max();
    let n = g.n();
    (0..n)
        .map(|i| {
            let ax: f64 = (0..n).map(|j| g.weight(i, j) * x[j]).sum();
            (ax - lambda * x[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Effective resistance between `i` and `j` of a connected graph: ground
/// `j`, inject unit current at `i`, read the potential at `i`.
pub fn effective_resistance(g: &WeightedGraph, i: usize, j: usize) -> f64 {
    if i == j {
        return 0.0;
    }
    let n = g.n();
    let keep: Vec<usize> = (0..n).filter(|&v| v != j).collect();
    let m: Vec<Vec<f64>> = keep
        .iter()
        .map(|&u| {
            keep.iter()
                .map(|&v| {
                    if u == v {
                        strength(g, u)
                    } else {
                        -g.weight(u, v)
                    }
                })
                .collect()
        })
        .collect();
    let b: Vec<f64> = keep
        .iter()
        .map(|&u| if u == i { 1.0 } else { 0.0 })
        .collect();
    let x = gauss_solve(m, b);
    x[keep.iter().position(|&u| u == i).unwrap()]
}

/// Information centrality of a connected graph as `n / sum_j R_ij`.
pub fn oracle_information(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    (0..n)
        .map(|i| {
            let total: f64 = (0..n).map(|j| effective_resistance(g, i, j)).sum();
            n as f64 / total
        })
        .collect()
}

/// PageRank as the solution of its linear system, with dangling nodes
/// linking to everyone.
pub fn oracle_pagerank(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let d = 0.85;
    // x_j = (1-d)/n + d * sum_i M_ji x_i
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let s = strength(g, i);
        for (j, row) in m.iter_mut().enumerate() {
            let link = if s == 0.0 {
                1.0 / n as f64
            } else {
                g.weight(i, j) / s
            };
            row[i] -= d * link;
        }
    }
    for (k, row) in m.iter_mut().enumerate() {
        row[k] += 1.0;
    }
    let x = gauss_solve(m, vec![(1.0 - d) / n as f64; n]);
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

/// Katz as the series `sum_k (alpha A)^k beta 1`, unit L2 norm.
pub fn oracle_katz(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let alpha = 0.1;
    let mut term = vec![1.0; n];
    let mut sum = term.clone();
    for _ in 0..2000 {
        term = (0..n)
            .map(|i| alpha * (0..n).map(|j| g.weight(i, j) * term[j]).sum::<f64>())
            .collect();
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
        if term.iter().all(|t| t.abs() < 1e-18) {
            break;
        }
    }
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    sum.iter().map(|v| v / norm).collect()
}

/// Laplacian energy as the sum of squared Laplacian eigenvalues.
pub fn spectral_energy(g: &WeightedGraph) -> f64 {
    let n = g.n();
    let mut l = -dense(g);
    for i in 0..n {
        l[(i, i)] = strength(g, i);
    }
    SymmetricEigen::new(l)
        .eigenvalues
        .iter()
        .map(|x| x * x)
        .sum()
}

/// Relative energy drop after physically deleting each node.
pub fn oracle_laplacian_centrality(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let e = spectral_energy(g);
    (0..n)
        .map(|v| {
            let keep: Vec<usize> = (0..n).filter(|&u| u != v).collect();
            let rows: Vec<Vec<f64>> = keep
                .iter()
                .map(|&a| keep.iter().map(|&b| g.weight(a, b)).collect())
                .collect();
            let sub = WeightedGraph::from_rows(&rows).unwrap();
            (e - spectral_energy(&sub)) / e
        })
        .collect()
}

/// Geometric-mean weighted clustering by a triple loop.
pub fn oracle_clustering(g: &WeightedGraph) -> Vec<f64> {
    let n = g.n();
    let max = g.as_slice().iter().copied().fold(0.0, f64::max);
    let w = |i: usize, j: usize| g.weight(i, j) / max;
    (0..n)
        .map(|i| {
            let k = (0..n).filter(|&j| g.weight(i, j) > 0.0).count();
            if k < 2 {
                return 0.0;
            }
            let mut total = 0.0;
            for j in 0..n {
                for l in 0..n {
                    if j != i && l != i && j != l {
                        total += (w(i, j) * w(j, l) * w(l, i)).cbrt();
                    }
                }
            }
            total / (k * (k - 1)) as f64
        })
        .collect()
}

/// Frobenius norm of the Laplacian difference, entry by entry.
pub fn oracle_laplacian_frobenius(a: &WeightedGraph, b: &WeightedGraph) -> f64 {
    let n = a.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let la = if i == j {
                strength(a, i)
            } else {
                -a.weight(i, j)
            };
            let lb = if i == j {
                strength(b, i)
            } else {
                -b.weight(i, j)
            };
            sum += (la - lb).powi(2);
        }
    }
    sum.sqrt()
}

/// Shannon entropy (nats) of the neighbour-weight distribution.
pub fn oracle_entropy(g: &WeightedGraph, v: usize) -> f64 {
    let ws: Vec<f64> = (0..g.n())
        .map(|j| g.weight(v, j))
        .filter(|&w| w > 0.0)
        .collect();
    if ws.len() <= 1 {
        return 0.0;
    }
    let total: f64 = ws.iter().sum();
    -ws.iter()
        .map(|w| w / total)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// Roots by a plain stable sort on oracle entropies (descending).
pub fn oracle_roots(g: &WeightedGraph, m: usize) -> Vec<usize> {
    let scores: Vec<f64> = (0..g.n()).map(|v| oracle_entropy(g, v)).collect();
    let mut ids: Vec<usize> = (0..g.n()).collect();
    ids.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    ids.truncate(m);
    ids
}
