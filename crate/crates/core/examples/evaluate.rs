//! Scores an untrained model against the self-supervised targets of a few
//! synthetic graphs, and an oracle that returns the target itself.
//!
//! ```text
//! cargo run --release --example evaluate -- [graphs]
//! ```

use subtreegen::metrics::{evaluate_all, evaluate_graphs, report_csv, Which};
use subtreegen::model::{init_params, predict, ModelConfig};
use subtreegen::synth::{generate_dataset, SynthConfig};
use subtreegen::train::Mode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graphs: usize = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(5);
    let synth = SynthConfig {
        n_graphs: graphs,
        ..SynthConfig::default()
    };
    let model = ModelConfig::default();
    let params = init_params(&model, 0);

    let mut untrained = Vec::new();
    let mut perfect = Vec::new();
    for g in generate_dataset(&synth)? {
        let pair = Mode::SelfSupervised.apply(&g.pair);
        let decoded = predict(&pair.source, &params, &model)?;
        untrained.push((
            pair.id.clone(),
            evaluate_all(&decoded, &pair.target, Which::Fused)?,
        ));
        perfect.push((
            pair.id.clone(),
            evaluate_graphs(&pair.target, &pair.target)?,
        ));
    }
    println!("untrained model:\n{}", report_csv(&untrained));
    println!("target as prediction:\n{}", report_csv(&perfect));
    Ok(())
}
