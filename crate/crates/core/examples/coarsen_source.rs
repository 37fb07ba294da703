//! Coarsen a community-structured graph into a super-graph.
//!
//! `cargo run --example coarsen_source`

use structxfer::supergraph::{coarsen, default_max_super_size, CoarsenMethod};
use structxfer::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (source, _) = synth::stochastic_block_model(&[200, 200, 200], 0.05, 0.002, 3);
    let cap = default_max_super_size(source.node_count(), 60);
    for method in [CoarsenMethod::LabelPropagation, CoarsenMethod::DegreeBins] {
        let sg = coarsen(&source, method, cap, 3)?;
        let largest = (0..sg.len() as u32).map(|s| sg.members(s).len()).max().unwrap_or(0);
        println!(
            "{method:?}: {} super-nodes, {} super-edges, largest {largest} (cap {cap})",
            sg.len(),
            sg.super_edge_count()
        );
    }
    Ok(())
}
