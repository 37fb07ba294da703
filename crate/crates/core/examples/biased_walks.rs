//! Compare return and outward biases of second-order walks on a small graph.
//!
//! `cargo run --example biased_walks`

use structxfer::rng::seeded;
use structxfer::synth;
use structxfer::walker::{WalkParams, Walker};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = synth::ring(12);
    for (p, q) in [(1.0, 1.0), (4.0, 0.25), (0.25, 4.0)] {
        let walker = Walker::new(
            &graph,
            WalkParams {
                p,
                q,
                walk_length: 10,
                walks_per_node: 50,
                seed: 1,
            },
        )?;
        let mut rng = seeded(1);
        let (walk, _) = walker.walk_from(0, &mut rng);
        let walks = walker.walk_set();
        let backtracks: usize = walks
            .walks
            .iter()
            .flat_map(|w| w.windows(3))
            .filter(|t| t[0] == t[2])
            .count();
        let steps = walks.total_steps();
        println!(
            "p={p:<4} q={q:<4} backtrack share {:.3}  sample walk {walk:?}",
            backtracks as f64 / steps as f64
        );
    }
    Ok(())
}
