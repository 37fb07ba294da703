//! Run the repeated-split classification protocol on trained embeddings.
//!
//! `cargo run --example evaluate_embeddings`

use structxfer::eval::{run_protocol, ProtocolParams};
use structxfer::skipgram::{train, TrainConfig};
use structxfer::synth;
use structxfer::walker::{WalkParams, Walker};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, labels) = synth::stochastic_block_model(&[60, 60, 60], 0.12, 0.01, 21);
    let walks = Walker::new(
        &graph,
        WalkParams {
            walk_length: 40,
            walks_per_node: 5,
            seed: 21,
            ..WalkParams::default()
        },
    )?
    .walk_set();
    let emb = train(
        &walks,
        graph.node_count(),
        &TrainConfig {
            dim: 32,
            seed: 21,
            ..TrainConfig::default()
        },
    )?;
    let params = ProtocolParams {
        fractions: vec![0.1, 0.5, 0.9],
        repeats: 5,
        seed: 21,
        ..ProtocolParams::default()
    };
    let report = run_protocol(&emb, &labels, &params)?;
    print!("{}", report.to_table("walks"));
    Ok(())
}
