//! Fit power laws to a degree sequence and to walk visit counts.
//!
//! `cargo run --example powerlaw_diagnostics`

use structxfer::powerlaw;
use structxfer::synth;
use structxfer::walker::{WalkParams, Walker};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = synth::barabasi_albert(5000, 2, 9);
    let degrees = powerlaw::diagnose_graph(&graph)?;
    let walks = Walker::new(
        &graph,
        WalkParams {
            walks_per_node: 2,
            seed: 9,
            ..WalkParams::default()
        },
    )?
    .walk_set();
    let visits = powerlaw::diagnose_walks(&walks, graph.node_count())?;
    println!("degrees: {}", degrees.summary());
    println!("visits:  {}", visits.summary());
    let mut csv = Vec::new();
    degrees.write_csv(&mut csv)?;
    let head: Vec<_> = String::from_utf8_lossy(&csv)
        .lines()
        .take(4)
        .map(str::to_owned)
        .collect();
    println!("{}", head.join("\n"));
    Ok(())
}
