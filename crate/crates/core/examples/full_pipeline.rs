//! Run the staged pipeline end to end on generated data, then resume from embed.
//!
//! `cargo run --example full_pipeline -- [out_dir]`

use std::path::PathBuf;

use structxfer::config::PipelineConfig;
use structxfer::pipeline::{run_pipeline, RunOptions, Stage};
use structxfer::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "pipeline_demo".into()));
    std::fs::create_dir_all(&dir)?;
    let (source, _) = synth::stochastic_block_model(&[150, 150], 0.05, 0.004, 1);
    let (target, labels) = synth::stochastic_block_model(&[40, 40], 0.12, 0.02, 2);
    source.save_edge_list(dir.join("source.edges"))?;
    target.save_edge_list(dir.join("target.edges"))?;
    let lines: String = labels
        .labeled_nodes()
        .into_iter()
        .map(|v| {
            format!(
                "{} {}\n",
                target.label(v),
                labels.class_name(labels.get(v).expect("labeled"))
            )
        })
        .collect();
    std::fs::write(dir.join("target.labels"), lines)?;

    let mut cfg = PipelineConfig::from_toml(
        r#"
seed = 42
[paths]
source_edges = "source.edges"
target_edges = "target.edges"
target_labels = "target.labels"
output_dir = "out"
[source_walk]
walk_length = 30
walks_per_node = 4
[target_walk]
walk_length = 30
walks_per_node = 4
[embed]
dim = 32
epochs = 2
[eval]
repeats = 3
"#,
    )?;
    cfg.base_dir = dir.clone();
    let run = run_pipeline(&cfg, &RunOptions::default())?;
    print!(
        "{}",
        run.report.as_ref().map(|r| r.to_table("transfer")).unwrap_or_default()
    );
    let resumed = run_pipeline(
        &cfg,
        &RunOptions {
            from_stage: Some(Stage::Embed),
            ..RunOptions::default()
        },
    )?;
    for stage in &resumed.manifest.stages {
        println!("{:<14} {:?}", stage.stage.to_string(), stage.status);
    }
    println!("artifacts in {}", resumed.out_dir.display());
    Ok(())
}
