#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use proptest::prelude::*;
use subtreegen::metrics::{evaluate_graphs, laplacian_frobenius};
use subtreegen::model::{init_params, predict, ModelConfig};
use subtreegen::subtree::{node_entropy, select_roots};
use subtreegen::synth::{generate_pair, write_dataset, SynthConfig};
use subtreegen::train::kfold_split;
use subtreegen::WeightedGraph;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn graph_strategy() -> impl Strategy<Value = WeightedGraph> {
    (2usize..12, any::<u64>(), 0.1f64..0.9)
        .prop_map(|(n, seed, p)| random_graph(&mut rng(seed), n, p))
}

fn perm_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_ignore_node_labels(
        (g, h, perm) in (graph_strategy(), any::<u64>()).prop_flat_map(|(g, s)| {
            let n = g.n();
            let h = random_graph(&mut rng(s), n, 0.5);
            (Just(g), Just(h), perm_strategy(n))
        })
    ) {
        let a = evaluate_graphs(&g, &h).unwrap().values();
        let b = evaluate_graphs(&g.permuted(&perm), &h.permuted(&perm)).unwrap().values();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.is_nan() && y.is_nan()) || (x - y).abs() <= 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn entropy_follows_relabelling(
        (g, perm) in graph_strategy().prop_flat_map(|g| { let n = g.n(); (Just(g), perm_strategy(n)) })
    ) {
        let p = g.permuted(&perm);
        for v in 0..g.n() {
            prop_assert!((node_entropy(&g, v) - node_entropy(&p, perm[v])).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_ignores_weight_scale(g in graph_strategy(), c in 1e-3f64..1e3) {
        let s = g.scaled(c);
        for v in 0..g.n() {
            prop_assert!((node_entropy(&g, v) - node_entropy(&s, v)).abs() <= 1e-12);
            prop_assert!((node_entropy(&g, v) - oracle_entropy(&g, v)).abs() <= 1e-12);
        }
        let m = 1 + g.n() / 2;
        prop_assert_eq!(select_roots(&g, m).unwrap(), select_roots(&s, m).unwrap());
    }

    #[test]
    fn binarize_is_monotone_in_eps(g in graph_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (bl, bh) = (g.binarize(lo), g.binarize(hi));
        prop_assert!(bh.edge_count() <= bl.edge_count());
        for i in 0..g.n() {
            for j in 0..g.n() {
                prop_assert!(!bh.has_edge(i, j) || bl.has_edge(i, j));
            }
        }
    }

    #[test]
    fn frobenius_is_a_metric(
        (a, b, c) in graph_strategy().prop_flat_map(|g| {
            let n = g.n();
            (Just(g), any::<u64>(), any::<u64>()).prop_map(move |(g, s, t)| {
                (g, random_graph(&mut rng(s), n, 0.5), random_graph(&mut rng(t), n, 0.5))
            })
        })
    ) {
        let d = |x: &WeightedGraph, y: &WeightedGraph| laplacian_frobenius(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
    }

    #[test]
    fn csv_round_trip_is_exact(g in graph_strategy()) {
        let text = g.to_csv();
        let back = WeightedGraph::parse_csv(&text).unwrap();
        prop_assert_eq!(back.to_csv(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn predictions_are_symmetric_valid_graphs(index in 0usize..50, seed in any::<u64>()) {
        let cfg = SynthConfig { n: 12, modules: 3, ..SynthConfig::default() };
        let g = generate_pair(&cfg, index).unwrap().pair.source;
        let model = ModelConfig { n: 12, m: 4, ..ModelConfig::default() };
        let out = predict(&g, &init_params(&model, seed), &model).unwrap();
        prop_assert!(out.fused.validate().is_empty());
        prop_assert!(out.raw().unwrap().validate().is_empty());
    }
}

#[test]
fn dataset_files_load_and_save_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    let cfg = SynthConfig {
        n_graphs: 3,
        ..SynthConfig::default()
    };
    let manifest = write_dataset(&cfg, &root).unwrap();
    for id in &manifest.ids {
        for side in ["source", "target"] {
            let path = root.join(side).join(format!("{id}.csv"));
            let bytes = std::fs::read(&path).unwrap();
            let g = WeightedGraph::load(&path).unwrap();
            assert_eq!(g.n(), 35);
            let copy = dir.path().join("copy.csv");
            g.save(&copy).unwrap();
            assert_eq!(std::fs::read(&copy).unwrap(), bytes, "{side}/{id}");
        }
        let pair = generate_pair(&cfg, manifest.ids.iter().position(|x| x == id).unwrap()).unwrap();
        assert_eq!(
            WeightedGraph::load(root.join("source").join(format!("{id}.csv"))).unwrap(),
            pair.pair.source
        );
    }
}

// Golden values pin the generator's output across refactors and platforms.
#[test]
fn synth_output_is_pinned() {
    let cfg = SynthConfig::default();
    let sums: Vec<u64> = (0..3)
        .map(|i| {
            let p = generate_pair(&cfg, i).unwrap().pair;
            fnv1a(format!("{}{}", p.source.to_csv(), p.target.to_csv()).as_bytes())
        })
        .collect();
    assert_eq!(sums, GOLDEN_SYNTH, "{sums:#x?}");
}
const GOLDEN_SYNTH: [u64; 3] = [0x2a6a39d92386083d, 0xa55ad6f55c8ad23d, 0x6a0e2821b1203419];

#[test]
fn fold_assignment_is_pinned() {
    let ids: Vec<usize> = (0..20).collect();
    let folds = kfold_split(&ids, 5, 42).unwrap();
    assert_eq!(folds.folds, GOLDEN_FOLDS.map(|f| f.to_vec()).to_vec());
}
const GOLDEN_FOLDS: [[usize; 4]; 5] = [
    [7, 1, 11, 16],
    [6, 12, 3, 10],
    [15, 13, 14, 19],
    [18, 0, 8, 2],
    [4, 17, 9, 5],
];
