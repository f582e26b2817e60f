//! Writes a synthetic dataset to disk and summarises it.
//!
//! ```text
//! cargo run --release --example gen_dataset -- <out-dir> [n_graphs] [seed]
//! ```

use std::path::PathBuf;

use subtreegen::graph::load_pair;
use subtreegen::synth::{write_dataset, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(
        args.next()
            .ok_or("usage: gen_dataset <out-dir> [n_graphs] [seed]")?,
    );
    let cfg = SynthConfig {
        n_graphs: args.next().map(|a| a.parse()).transpose()?.unwrap_or(20),
        seed: args.next().map(|a| a.parse()).transpose()?.unwrap_or(42),
        ..SynthConfig::default()
    };
    let manifest = write_dataset(&cfg, &root)?;
    let mut edges = 0usize;
    for id in &manifest.ids {
        edges += load_pair(&root, id)?.source.edge_count();
    }
    println!(
        "{} pairs in {}; mean edges {:.1} (expected {:.1})",
        manifest.ids.len(),
        root.display(),
        edges as f64 / manifest.ids.len() as f64,
        cfg.expected_edges()
    );
    if let Some(folds) = &manifest.folds {
        println!("fold sizes {:?}", folds.sizes());
    }
    Ok(())
}
