use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use structxfer::eval::{ProtocolParams, FRACTIONS};
use structxfer::pipeline::{run_pipeline, RunOptions, Stage};
use structxfer::skipgram::{train, Objective, TrainConfig};
use structxfer::supergraph::{self, CoarsenMethod, MapMode, SuperDegree};
use structxfer::transfer::{two_layer_walks, CoarsenParams, TransferParams, TwoLayerParams};
use structxfer::{powerlaw, validate_config, EmbeddingMatrix, Error, Graph, LabelTable, WalkParams, WalkSet, Walker};

#[derive(Parser)]
#[command(
    name = "structxfer",
    version,
    about = "Cross-network structure transfer for node embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Biased second-order random walks on one graph.
    Walk {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Coarsen a source graph into super-nodes.
    Coarsen {
        #[arg(long)]
        source: PathBuf,
        /// Target graph, used only for the default super-node size.
        #[arg(long, required_unless_present = "max_size")]
        target: Option<PathBuf>,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long, default_value = "label-propagation", value_parser = kebab::<CoarsenMethod>)]
        method: CoarsenMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Source walks, coarsening, re-weighting and target walks.
    Transfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        reweighted: PathBuf,
        #[arg(long)]
        walks: PathBuf,
        #[arg(long)]
        supergraph: Option<PathBuf>,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long, default_value_t = 10)]
        distance_cap: u32,
        #[arg(long, default_value = "nearest", value_parser = kebab::<MapMode>)]
        map_mode: MapMode,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Train Skip-gram embeddings from a walk file.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        walks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.025)]
        lr: f64,
        #[arg(long, default_value = "negative-sampling", value_parser = kebab::<Objective>)]
        mode: Objective,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Split/repeat classification protocol on an embedding file.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 1e-4)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Machine-readable report (JSON).
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value = "embedding")]
        method: String,
    },
    /// Run every stage from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        skip_transfer: bool,
        #[arg(long, value_parser = |s: &str| s.parse::<Stage>())]
        from_stage: Option<Stage>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Log-log fit of degree or walk-visit frequencies.
    Diagnose {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        directed: bool,
        /// Fit visit counts from this walk file instead of degrees.
        #[arg(long)]
        walks: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a config file and list every problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Clone)]
struct WalkArgs {
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, default_value_t = 80)]
    length: usize,
    #[arg(long, default_value_t = 10)]
    walks_per_node: usize,
    #[arg(long, default_value_t = 0)]
    walk_seed: u64,
}

impl WalkArgs {
    fn params(&self) -> WalkParams {
        WalkParams {
            p: self.p,
            q: self.q,
            walk_length: self.length,
            walks_per_node: self.walks_per_node,
            seed: self.walk_seed,
        }
    }
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Stage(Error),
}

fn check(problems: Vec<String>) -> Result<(), Failure> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Usage(problems.join("\n")))
    }
}

fn with_threads<T>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

fn load(path: &PathBuf, directed: bool) -> Result<Graph, Failure> {
    let (graph, report) = Graph::load_edge_list(path, directed).map_err(Failure::Stage)?;
    log::info!(
        "{}: {} nodes, {} edges, {report:?}",
        path.display(),
        graph.node_count(),
        graph.edge_count()
    );
    Ok(graph)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Walk {
            graph,
            directed,
            out,
            walk,
            threads,
        } => {
            let params = walk.params();
            check(params.problems())?;
            let g = load(&graph, directed)?;
            let walks =
                with_threads(threads, || Walker::new(&g, params).map(|w| w.walk_set()))?.map_err(Failure::Stage)?;
            walks.save(&g, &out).map_err(Failure::Stage)?;
            println!("{} walks written to {}", walks.len(), out.display());
        }
        Command::Coarsen {
            source,
            target,
            max_size,
            method,
            seed,
            out,
        } => {
            if max_size == Some(0) {
                return Err(Failure::Usage("--max-size must be >= 1".into()));
            }
            let s = load(&source, false)?;
            let size = match (max_size, target) {
                (Some(m), _) => m,
                (None, Some(t)) => supergraph::default_max_super_size(s.node_count(), load(&t, false)?.node_count()),
                (None, None) => unreachable!("clap requires --target without --max-size"),
            };
            let sg = supergraph::coarsen(&s, method, size, seed).map_err(Failure::Stage)?;
            sg.save(&s, &out).map_err(Failure::Stage)?;
            println!(
                "{} super-nodes, {} super-edges (max size {size})",
                sg.len(),
                sg.super_edge_count()
            );
        }
        Command::Transfer {
            source,
            target,
            reweighted,
            walks,
            supergraph,
            walk,
            max_size,
            distance_cap,
            map_mode,
            threads,
        } => {
            let params = TwoLayerParams {
                source_walk: walk.params(),
                target_walk: walk.params(),
                coarsen: CoarsenParams {
                    max_super_size: max_size,
                    ..CoarsenParams::default()
                },
                transfer: TransferParams {
                    distance_cap,
                    map_mode,
                    super_degree: SuperDegree::Adjacent,
                    ..TransferParams::default()
                },
            };
            check(params.source_walk.problems())?;
            check(params.transfer.problems())?;
            let s = load(&source, false)?;
            let t = load(&target, false)?;
            let outcome = with_threads(threads, || two_layer_walks(&s, &t, &params))?.map_err(Failure::Stage)?;
            outcome.reweighted.save_edge_list(&reweighted).map_err(Failure::Stage)?;
            outcome.target_walks.save(&t, &walks).map_err(Failure::Stage)?;
            if let Some(path) = supergraph {
                outcome.super_graph.save(&s, path).map_err(Failure::Stage)?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.stats).expect("stats serialize")
            );
        }
        Command::Embed {
            graph,
            directed,
            walks,
            out,
            dim,
            window,
            epochs,
            lr,
            mode,
            negatives,
            seed,
            threads,
        } => {
            let cfg = TrainConfig {
                dim,
                window,
                epochs,
                lr_start: lr,
                // keep the default start/end ratio
                lr_end: lr * (TrainConfig::default().lr_end / TrainConfig::default().lr_start),
                mode,
                negatives,
                seed,
                threads,
                ..TrainConfig::default()
            };
            check(cfg.problems())?;
            let g = load(&graph, directed)?;
            let ws = WalkSet::load(&walks, &g).map_err(Failure::Stage)?;
            let emb = train(&ws, g.node_count(), &cfg).map_err(Failure::Stage)?;
            emb.save(&g, &out).map_err(Failure::Stage)?;
            println!(
                "{} x {} embeddings written to {}",
                emb.node_count(),
                emb.dim(),
                out.display()
            );
        }
        Command::Eval {
            graph,
            directed,
            labels,
            embeddings,
            fractions,
            repeats,
            lambda,
            seed,
            json,
            method,
        } => {
            let mut params = ProtocolParams {
                fractions: fractions.unwrap_or_else(|| FRACTIONS.to_vec()),
                repeats,
                seed,
                ..ProtocolParams::default()
            };
            params.classifier.lambda = lambda;
            check(params.problems())?;
            let g = load(&graph, directed)?;
            let table = LabelTable::load(&labels, &g).map_err(Failure::Stage)?;
            let emb = EmbeddingMatrix::load(&embeddings, &g).map_err(Failure::Stage)?;
            let report = structxfer::run_protocol(&emb, &table, &params).map_err(Failure::Stage)?;
            print!("{}", report.to_table(&method));
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                std::fs::write(&path, text + "\n").map_err(|e| {
                    Failure::Stage(Error::Io {
                        path: path.clone(),
                        source: e,
                    })
                })?;
            }
        }
        Command::Pipeline {
            config,
            skip_transfer,
            from_stage,
            threads,
        } => {
            let cfg = validate_config(&config).map_err(|errs| Failure::Usage(errs.join("\n")))?;
            let opts = RunOptions {
                skip_transfer,
                from_stage,
                threads,
            };
            let outcome = run_pipeline(&cfg, &opts).map_err(|e| match e {
                Error::Config(_) => Failure::Usage(e.to_string()),
                e => Failure::Stage(e),
            })?;
            if let Some(report) = &outcome.report {
                print!(
                    "{}",
                    report.to_table(if cfg.skip_transfer || skip_transfer {
                        "baseline"
                    } else {
                        "transfer"
                    })
                );
            }
            println!("artifacts in {}", outcome.out_dir.display());
        }
        Command::Diagnose {
            graph,
            directed,
            walks,
            csv,
        } => {
            let g = load(&graph, directed)?;
            let fit = match walks {
                Some(w) => {
                    let ws = WalkSet::load(&w, &g).map_err(Failure::Stage)?;
                    powerlaw::diagnose_walks(&ws, g.node_count())
                }
                None => powerlaw::diagnose_graph(&g),
            }
            .map_err(Failure::Stage)?;
            println!("{}", fit.summary());
            if let Some(path) = csv {
                let file = std::fs::File::create(&path).map_err(|e| {
                    Failure::Stage(Error::Io {
                        path: path.clone(),
                        source: e,
                    })
                })?;
                fit.write_csv(std::io::BufWriter::new(file)).map_err(|e| {
                    Failure::Stage(Error::Io {
                        path: path.clone(),
                        source: e,
                    })
                })?;
            }
        }
        Command::Validate { config } => match validate_config(&config) {
            Ok(_) => println!("{}: ok", config.display()),
            Err(errors) => return Err(Failure::Usage(errors.join("\n"))),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
