//! Compares the full decoder with its two single-branch variants on a small
//! synthetic dataset, over several training seeds.
//!
//! ```text
//! cargo run --release --example ablation -- [pairs] [epochs] [seeds] [all_pairs|edges]
//! ```

use subtreegen::model::{DecoderVariant, ModelConfig};
use subtreegen::synth::{generate_dataset, SynthConfig};
use subtreegen::train::{holdout_run, Mode, TrainConfig, WeightLoss};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let pairs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(40);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(50);
    let seeds: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);
    let weight_loss = match args.next().as_deref() {
        Some("edges") => WeightLoss::Edges,
        _ => WeightLoss::AllPairs,
    };

    let synth = SynthConfig {
        n_graphs: pairs,
        ..SynthConfig::default()
    };
    let dataset: Vec<_> = generate_dataset(&synth)?
        .into_iter()
        .map(|g| Mode::SelfSupervised.apply(&g.pair))
        .collect();

    let variants = [
        DecoderVariant::Full,
        DecoderVariant::NoWeightBranch,
        DecoderVariant::NoStructBranch,
    ];
    println!("seed  full      no-weight no-struct");
    for seed in 0..seeds {
        let config = TrainConfig {
            epochs,
            seed: 42 + seed,
            weight_loss,
            ..TrainConfig::default()
        };
        let mut row = Vec::new();
        for variant in variants {
            let model = ModelConfig {
                variant,
                ..ModelConfig::default()
            };
            row.push(holdout_run(&dataset, &config, &model)?.test_mae);
        }
        println!(
            "{:<5} {:.5}   {:.5}   {:.5}",
            config.seed, row[0], row[1], row[2]
        );
    }
    Ok(())
}
