//! Learn edge weights for a sparse target from a denser source and walk it.
//!
//! `cargo run --example structure_transfer`

use structxfer::synth;
use structxfer::transfer::{two_layer_walks, TwoLayerParams};
use structxfer::walker::WalkParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (source, _) = synth::stochastic_block_model(&[300, 300], 0.03, 0.002, 11);
    let (target, _) = synth::stochastic_block_model(&[50, 50], 0.08, 0.01, 12);
    let walk = WalkParams {
        walk_length: 40,
        walks_per_node: 5,
        ..WalkParams::default()
    };
    let params = TwoLayerParams {
        source_walk: walk,
        target_walk: walk,
        ..TwoLayerParams::default()
    };
    let out = two_layer_walks(&source, &target, &params)?;
    println!("{}", serde_json::to_string_pretty(&out.stats).expect("stats serialize"));
    for (step, took) in &out.stats.timings {
        println!("  {step:<16} {:.3}s", took.as_secs_f64());
    }
    let sample: Vec<_> = out.reweighted.edges().take(5).collect();
    println!("first reweighted edges {sample:?}");
    Ok(())
}
