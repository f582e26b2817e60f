//! Rotates the validation fold over folds 1..k on a small synthetic set,
//! keeping fold 0 out as the test fold.
//!
//! ```text
//! cargo run --release --example cross_validation -- [pairs] [epochs]
//! ```

use subtreegen::model::ModelConfig;
use subtreegen::synth::{generate_dataset, SynthConfig};
use subtreegen::train::{cross_validate, Mode, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let pairs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(25);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);

    let synth = SynthConfig {
        n_graphs: pairs,
        ..SynthConfig::default()
    };
    let data: Vec<_> = generate_dataset(&synth)?
        .into_iter()
        .map(|g| Mode::SelfSupervised.apply(&g.pair))
        .collect();
    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let results = cross_validate(&data, &config, &ModelConfig::default())?;
    for r in &results {
        println!(
            "validation fold {}: fused edge-MAE {:.4}",
            r.val_fold, r.val_mae
        );
    }
    let mean = results.iter().map(|r| r.val_mae).sum::<f64>() / results.len() as f64;
    println!("mean {mean:.4}");
    Ok(())
}
