//! Oracle comparisons on inputs the acceptance sweep avoids: disconnected,
//! bipartite and edgeless graphs.

mod common;

use common::*;
use subtreegen::metrics::{
    betweenness_centrality, clustering_coefficients, connected_components, degree_centrality,
    eigenvector_centrality, information_centrality, katz_centrality, laplacian_centrality,
    pagerank, spectral_radius, MetricError,
};
use subtreegen::WeightedGraph;

const TOL: f64 = 1e-9;

fn induced(g: &WeightedGraph, nodes: &[usize]) -> WeightedGraph {
    let adj = nodes
        .iter()
        .flat_map(|&u| nodes.iter().map(move |&v| g.weight(u, v)))
        .collect();
    WeightedGraph::from_dense(nodes.len(), adj).unwrap()
}

#[test]
fn sparse_graphs_match_oracles() {
    let mut r = rng(11);
    for i in 0..150 {
        let g = random_graph(&mut r, 2 + i % 8, 0.25);
        assert!(max_abs_diff(&degree_centrality(&g), &oracle_degree(&g)) <= TOL);
        assert!(max_abs_diff(&betweenness_centrality(&g), &oracle_betweenness(&g)) <= TOL);
        assert!(max_abs_diff(&pagerank(&g), &oracle_pagerank(&g)) <= 1e-8);
        assert!(max_abs_diff(&laplacian_centrality(&g), &oracle_laplacian_centrality(&g)) <= TOL);
        assert!(max_abs_diff(&clustering_coefficients(&g), &oracle_clustering(&g)) <= TOL);
        match katz_centrality(&g) {
            Ok(k) => assert!(max_abs_diff(&k, &oracle_katz(&g)) <= 1e-8),
            Err(e) => assert!(spectral_radius(&g) > 0.0, "{e}"),
        }
    }
}

#[test]
fn information_scores_every_largest_component() {
    let mut r = rng(12);
    let mut disconnected = 0;
    for i in 0..150 {
        let g = random_graph(&mut r, 3 + i % 7, 0.3);
        let comps = connected_components(&g);
        let ic = information_centrality(&g).unwrap();
        assert_eq!(ic.used_largest_component, comps.len() > 1);
        disconnected += usize::from(comps.len() > 1);
        let k = comps[0].len();
        let mut expected = vec![0.0; g.n()];
        if k >= 2 {
            for comp in comps.iter().filter(|c| c.len() == k) {
                for (&v, s) in comp.iter().zip(oracle_information(&induced(&g, comp))) {
                    expected[v] = s;
                }
            }
        }
        assert!(max_abs_diff(&ic.scores, &expected) <= 1e-8, "{g:?}");
    }
    assert!(disconnected > 50);
}

#[test]
fn eigenvector_handles_bipartite_graphs() {
    // Even cycle and a star: plain power iteration oscillates on both.
    let cycle = WeightedGraph::from_edges(
        6,
        &[
            (0, 1, 0.5),
            (1, 2, 0.9),
            (2, 3, 0.4),
            (3, 4, 0.7),
            (4, 5, 0.6),
            (5, 0, 0.8),
        ],
    )
    .unwrap();
    let star = WeightedGraph::from_edges(5, &[(0, 1, 0.3), (0, 2, 0.6), (0, 3, 0.9), (0, 4, 1.0)])
        .unwrap();
    for g in [cycle, star] {
        let ev = eigenvector_centrality(&g).unwrap();
        assert!(max_abs_diff(&ev, &oracle_eigenvector(&g)) <= 1e-6);
        assert!(eigen_residual(&g, &ev) <= 1e-6);
    }
}

#[test]
fn edgeless_graphs() {
    let g = WeightedGraph::zeros(4);
    assert!(matches!(
        eigenvector_centrality(&g),
        Err(MetricError::NoConvergence(_))
    ));
    let ic = information_centrality(&g).unwrap();
    assert_eq!(ic.scores, vec![0.0; 4]);
    assert!(ic.used_largest_component);
    assert_eq!(betweenness_centrality(&g), vec![0.0; 4]);
    assert!(max_abs_diff(&pagerank(&g), &[0.25; 4]) <= 1e-12);
}
