//! Fits a single synthetic pair for many epochs and prints the trajectory.
//!
//! ```text
//! cargo run --release --example overfit -- [epochs] [seed] [lr] [all_pairs|edges]
//! ```

use std::time::Instant;

use subtreegen::metrics::mae_edges;
use subtreegen::model::{predict, ModelConfig};
use subtreegen::synth::{generate_pair, SynthConfig};
use subtreegen::train::{train, Mode, TrainConfig, WeightLoss};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(500);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(42);
    let lr: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1e-3);
    let weight_loss = match args.next().as_deref() {
        Some("edges") => WeightLoss::Edges,
        _ => WeightLoss::AllPairs,
    };

    let pair = Mode::Overfit.apply(&generate_pair(&SynthConfig::default(), 0)?.pair);
    let model = ModelConfig::default();
    let config = TrainConfig {
        epochs,
        seed,
        lr,
        weight_loss,
        ..TrainConfig::default()
    };

    let start = Instant::now();
    let (params, history) = train(std::slice::from_ref(&pair), &config, &model)?;
    for r in history
        .epochs
        .iter()
        .filter(|r| r.epoch == 1 || r.epoch % 50 == 0)
    {
        println!(
            "epoch {:4}  total {:.5}  bce {:.5}  mae {:.5}  fused-mae {:.5}",
            r.epoch, r.total, r.structure, r.weight, r.val_mae
        );
    }
    let decoded = predict(&pair.source, &params, &model)?;
    println!(
        "final fused edge-MAE {:.5} after {:.1?}",
        mae_edges(&decoded.fused, &pair.target)?,
        start.elapsed()
    );
    Ok(())
}
