//! Ranks the nodes of a synthetic graph by entropy and extracts the
//! breadth-first trees rooted at the top `m`.
//!
//! ```text
//! cargo run --example subtrees -- [m] [k]
//! ```

use subtreegen::subtree::{extract_all, EntropyStrategy, RootRanking};
use subtreegen::synth::{generate_pair, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);
    let k: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);

    let g = generate_pair(&SynthConfig::default(), 0)?.pair.source;
    println!("graph: {} nodes, {} edges", g.n(), g.edge_count());

    let ranking = RootRanking::compute(&g, EntropyStrategy::EdgeWeight);
    for &v in ranking.top(m) {
        println!(
            "node {v:2}  entropy {:.4}  degree {}",
            ranking.scores[v],
            g.degree(v)
        );
    }
    for t in extract_all(&g, m, k)? {
        t.check(&g)?;
        println!(
            "root {:2}: {} nodes, depth {}, tree weight {:.3}",
            t.root,
            t.len(),
            t.depth,
            t.edges.iter().map(|e| e.2).sum::<f64>()
        );
    }
    Ok(())
}
