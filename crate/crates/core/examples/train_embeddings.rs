//! Train skip-gram embeddings with both objectives and compare neighbors.
//!
//! `cargo run --example train_embeddings`

use structxfer::skipgram::{cosine, train, Objective, TrainConfig};
use structxfer::synth;
use structxfer::walker::{WalkParams, Walker};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, _) = synth::disjoint_cliques(3, 8);
    let walks = Walker::new(
        &graph,
        WalkParams {
            walk_length: 20,
            walks_per_node: 10,
            seed: 5,
            ..WalkParams::default()
        },
    )?
    .walk_set();
    for mode in [Objective::NegativeSampling, Objective::ExactSoftmax] {
        let cfg = TrainConfig {
            dim: 16,
            window: 4,
            epochs: 3,
            mode,
            seed: 5,
            ..TrainConfig::default()
        };
        let emb = train(&walks, graph.node_count(), &cfg)?;
        let same = cosine(emb.vector(0), emb.vector(1));
        let other = cosine(emb.vector(0), emb.vector(8));
        println!("{mode:?}: cos(same clique) {same:.3}  cos(other clique) {other:.3}");
    }
    Ok(())
}
