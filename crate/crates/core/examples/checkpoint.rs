//! Trains briefly, saves a checkpoint, reloads it and shows that predictions
//! survive the round trip bit for bit.
//!
//! ```text
//! cargo run --release --example checkpoint -- [epochs]
//! ```

use subtreegen::model::{predict, Checkpoint, ModelConfig};
use subtreegen::synth::{generate_dataset, SynthConfig};
use subtreegen::train::{train, Mode, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(3);
    let synth = SynthConfig {
        n_graphs: 8,
        ..SynthConfig::default()
    };
    let data: Vec<_> = generate_dataset(&synth)?
        .into_iter()
        .map(|g| Mode::SelfSupervised.apply(&g.pair))
        .collect();
    let model = ModelConfig::default();
    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let (params, history) = train(&data, &config, &model)?;
    print!("{}", history.to_csv());

    let dir = std::env::temp_dir().join(format!("subtreegen-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("checkpoint.json");
    Checkpoint::new(&model, config.seed, &params).save(&path)?;
    let loaded = Checkpoint::load(&path)?;

    let before = predict(&data[0].source, &params, &model)?;
    let after = predict(&data[0].source, &loaded.params()?, &loaded.config)?;
    println!(
        "{} parameters saved to {}; predictions identical: {}",
        params.count(),
        path.display(),
        before == after
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
