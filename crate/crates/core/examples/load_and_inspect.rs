//! Load an edge list (or a generated graph) and print basic statistics.
//!
//! `cargo run --example load_and_inspect -- [path/to/graph.edges]`

use structxfer::synth;
use structxfer::Graph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = match std::env::args().nth(1) {
        Some(path) => {
            let (g, report) = Graph::load_edge_list(&path, false)?;
            println!("{path}: {report:?}");
            g
        }
        None => synth::barabasi_albert(1000, 3, 7),
    };
    let (_, components) = graph.components();
    println!(
        "nodes {} edges {} components {components}",
        graph.node_count(),
        graph.edge_count()
    );
    let hist = graph.degree_histogram();
    let (min, max) = (hist.keys().next().unwrap_or(&0), hist.keys().last().unwrap_or(&0));
    println!("degree range {min}..={max}");
    for (degree, count) in hist.iter().take(5) {
        println!("  degree {degree:>3}: {count} nodes");
    }
    Ok(())
}
