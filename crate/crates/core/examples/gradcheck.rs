//! Checks the model's analytic gradients against central differences, then
//! repeats the check with a deliberately broken sigmoid backward rule.
//!
//! ```text
//! cargo run --release --example gradcheck -- [seed] [full]
//! ```

use subtreegen::autodiff::Fault;
use subtreegen::model::ModelConfig;
use subtreegen::train::{model_grad_check, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(7);
    let model = match args.next().as_deref() {
        Some("full") => ModelConfig::default(),
        _ => ModelConfig::tiny(),
    };
    let train = TrainConfig::default();
    for fault in [None, Some(Fault::SigmoidGrad)] {
        let r = model_grad_check(&model, &train, seed, 1e-6, fault)?;
        println!(
            "{:<14} {} params  loss {:.5}  max rel err {:.2e} in {}",
            if fault.is_some() {
                "broken rule:"
            } else {
                "engine:"
            },
            r.param_count,
            r.loss,
            r.max_rel_err,
            r.worst_param
        );
    }
    Ok(())
}
