//! End-to-end run driven by a [`PipelineConfig`].
//!
//! Stages run in order and each writes its artifacts into the output
//! directory:
//!
//! | stage          | artifacts                                      |
//! |----------------|------------------------------------------------|
//! | `source-walks` | `source_walks.txt`                             |
//! | `coarsen`      | `supergraph.txt`                               |
//! | `transfer`     | `reweighted_target.edges`, `transfer_stats.json` |
//! | `target-walks` | `target_walks.txt`                             |
//! | `embed`        | `embeddings.txt`                               |
//! | `eval`         | `report.txt`, `report.json`, `eval_runs.jsonl` |
//!
//! `manifest.json` records every stage's effective parameters, seed and the
//! SHA-256 of each artifact. Wall-clock timings go to `timings.json` so that
//! manifests of identical single-threaded runs are byte-identical. A failing
//! stage leaves its predecessors' artifacts in place and writes `FAILED`.

use std::fmt;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{run_protocol, EvalReport};
use crate::graph::{Graph, IngestReport, LabelTable};
use crate::skipgram::{train, EmbeddingMatrix};
use crate::supergraph::{self, SuperGraph};
use crate::transfer::{learn_weights, mean_edge_weight, reweight_target, TransferStats};
use crate::walker::{WalkSet, Walker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    SourceWalks,
    Coarsen,
    Transfer,
    TargetWalks,
    Embed,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::SourceWalks,
        Stage::Coarsen,
        Stage::Transfer,
        Stage::TargetWalks,
        Stage::Embed,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::SourceWalks => "source-walks",
            Stage::Coarsen => "coarsen",
            Stage::Transfer => "transfer",
            Stage::TargetWalks => "target-walks",
            Stage::Embed => "embed",
            Stage::Eval => "eval",
        }
    }

    /// Artifact file names, relative to the output directory.
    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Stage::SourceWalks => &["source_walks.txt"],
            Stage::Coarsen => &["supergraph.txt"],
            Stage::Transfer => &["reweighted_target.edges", "transfer_stats.json"],
            Stage::TargetWalks => &["target_walks.txt"],
            Stage::Embed => &["embeddings.txt"],
            Stage::Eval => &["report.txt", "report.json", "eval_runs.jsonl"],
        }
    }

    fn is_transfer_layer(self) -> bool {
        matches!(self, Stage::SourceWalks | Stage::Coarsen | Stage::Transfer)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
            format!("unknown stage {s:?}; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Ran,
    /// Artifacts of an earlier run were loaded (`--from-stage`).
    Reused,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub artifacts: Vec<ArtifactRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub threads: usize,
    pub skip_transfer: bool,
    pub config_sha256: String,
    pub inputs: Vec<InputRecord>,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage.name())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(&path.display().to_string(), e.line(), e.to_string()))
    }
}

/// Overrides applied on top of the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub skip_transfer: bool,
    pub from_stage: Option<Stage>,
    pub threads: Option<usize>,
}

pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub report: Option<EvalReport>,
    pub timings: Vec<(String, f64)>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Checks that every artifact named in `out_dir/manifest.json` exists and
/// hashes to its recorded value. Returns the mismatches.
pub fn verify_manifest(out_dir: &Path) -> Result<Vec<String>> {
    let manifest = Manifest::load(out_dir.join("manifest.json"))?;
    let mut problems = Vec::new();
    for stage in &manifest.stages {
        for a in &stage.artifacts {
            match sha256_file(&out_dir.join(&a.path)) {
                Ok((h, _)) if h == a.sha256 => {}
                Ok(_) => problems.push(format!("{}: hash mismatch", a.path)),
                Err(e) => problems.push(format!("{}: {e}", a.path)),
            }
        }
    }
    Ok(problems)
}

fn create<T>(path: &Path, write: impl FnOnce(&mut BufWriter<std::fs::File>) -> std::io::Result<T>) -> Result<T> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let value = write(&mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(value)
}

fn json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("parameter types serialize to JSON")
}

/// Target with edge weights taken, by node label, from a re-weighted copy.
fn restore_weights(target: &Graph, reweighted: &Graph) -> Result<Graph> {
    if reweighted.node_count() != target.node_count() || reweighted.edge_count() != target.edge_count() {
        return Err(Error::InvalidArgument(
            "re-weighted target does not match the target graph".into(),
        ));
    }
    let mut missing = None;
    let out = target.with_weights(|u, v, w| {
        let weight = reweighted
            .id_of(target.label(u))
            .zip(reweighted.id_of(target.label(v)))
            .and_then(|(a, b)| reweighted.edge_weight(a, b));
        weight.unwrap_or_else(|| {
            missing.get_or_insert((u, v));
            w
        })
    });
    match missing {
        Some((u, v)) => Err(Error::InvalidArgument(format!(
            "edge {} {} missing from the re-weighted target",
            target.label(u),
            target.label(v)
        ))),
        None => Ok(out),
    }
}

struct Run<'c> {
    cfg: &'c PipelineConfig,
    out: PathBuf,
    from: Stage,
    manifest: Manifest,
    /// Manifest of the run being resumed, if any.
    previous: Option<Manifest>,
    timings: Vec<(String, f64)>,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn reuse(&self, stage: Stage) -> bool {
        stage < self.from
    }

    fn record(
        &mut self,
        stage: Stage,
        status: StageStatus,
        seed: Option<u64>,
        mut params: serde_json::Value,
    ) -> Result<()> {
        if status == StageStatus::Reused && params.is_null() {
            if let Some(prev) = self.previous.as_ref().and_then(|m| m.stage(stage)) {
                params = prev.params.clone();
            }
        }
        let mut artifacts = Vec::new();
        if matches!(status, StageStatus::Ran | StageStatus::Reused) {
            for name in stage.artifacts() {
                let (sha256, bytes) = sha256_file(&self.path(name))?;
                artifacts.push(ArtifactRecord {
                    path: name.to_string(),
                    sha256,
                    bytes,
                });
            }
        }
        self.manifest.stages.push(StageRecord {
            stage: stage.name().to_string(),
            status,
            seed,
            params,
            artifacts,
            error: None,
        });
        Ok(())
    }

    /// Runs `body` for `stage`, attributing any error to it.
    fn stage<T>(&mut self, stage: Stage, body: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let result = body(self);
        let secs = start.elapsed().as_secs_f64();
        log::info!("{stage}: {secs:.3}s");
        self.timings.push((stage.name().to_string(), secs));
        result.map_err(|e| {
            self.manifest.stages.push(StageRecord {
                stage: stage.name().to_string(),
                status: StageStatus::Failed,
                seed: None,
                params: serde_json::Value::Null,
                artifacts: Vec::new(),
                error: Some(e.to_string()),
            });
            Error::Stage {
                stage: stage.name().to_string(),
                source: Box::new(e),
            }
        })
    }

    fn write_manifest(&self) -> Result<()> {
        let path = self.path("manifest.json");
        create(&path, |out| {
            serde_json::to_writer_pretty(&mut *out, &self.manifest)?;
            writeln!(out)
        })?;
        let timings: serde_json::Map<String, serde_json::Value> =
            self.timings.iter().map(|(k, v)| (k.clone(), json(v))).collect();
        create(&self.path("timings.json"), |out| {
            serde_json::to_writer_pretty(&mut *out, &timings)?;
            writeln!(out)
        })
    }

    fn input(&mut self, role: &str, path: &Path, ingest: Option<IngestReport>) -> Result<()> {
        let (sha256, _) = sha256_file(&self.cfg.resolve(path))?;
        self.manifest.inputs.push(InputRecord {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256,
            ingest,
        });
        Ok(())
    }

    fn execute(&mut self, skip_transfer: bool) -> Result<Option<EvalReport>> {
        let cfg = self.cfg;
        let target_path = cfg
            .paths
            .target_edges
            .clone()
            .ok_or_else(|| Error::Config(vec!["paths.target_edges is required".into()]))?;
        let (target, report) = Graph::load_edge_list(cfg.resolve(&target_path), cfg.paths.target_directed)?;
        log::info!("target: {} nodes, {} edges", target.node_count(), target.edge_count());
        self.input("target_edges", &target_path, Some(report))?;
        let labels = match (&cfg.paths.target_labels, cfg.eval.enabled) {
            (Some(p), true) => {
                let labels = LabelTable::load(cfg.resolve(p), &target)?;
                self.input("target_labels", p, None)?;
                Some(labels)
            }
            _ => None,
        };

        let walk_graph = if skip_transfer {
            for stage in [Stage::SourceWalks, Stage::Coarsen, Stage::Transfer] {
                self.record(stage, StageStatus::Skipped, None, serde_json::Value::Null)?;
            }
            target.clone()
        } else {
            self.transfer_layer(&target)?
        };

        let seed = cfg.stage_seed(Stage::TargetWalks.name());
        let params = crate::walker::WalkParams {
            seed,
            ..cfg.target_walk
        };
        let target_walks = self.stage(Stage::TargetWalks, |run| {
            let path = run.path("target_walks.txt");
            let status = if run.reuse(Stage::TargetWalks) {
                (WalkSet::load(&path, &target)?, StageStatus::Reused)
            } else {
                let walks = Walker::new(&walk_graph, params)?.walk_set();
                walks.save(&target, &path)?;
                (walks, StageStatus::Ran)
            };
            run.record(Stage::TargetWalks, status.1, Some(seed), json(&params))?;
            Ok(status.0)
        })?;

        let seed = cfg.stage_seed(Stage::Embed.name());
        let threads = self.cfg.threads;
        let train_cfg = crate::skipgram::TrainConfig {
            seed,
            threads,
            ..cfg.embed
        };
        let emb = self.stage(Stage::Embed, |run| {
            let path = run.path("embeddings.txt");
            let (emb, status) = if run.reuse(Stage::Embed) {
                (EmbeddingMatrix::load(&path, &target)?, StageStatus::Reused)
            } else {
                let emb = train(&target_walks, target.node_count(), &train_cfg)?;
                emb.save(&target, &path)?;
                (emb, StageStatus::Ran)
            };
            run.record(Stage::Embed, status, Some(seed), json(&train_cfg))?;
            Ok(emb)
        })?;

        let Some(labels) = labels else {
            self.record(Stage::Eval, StageStatus::Skipped, None, serde_json::Value::Null)?;
            return Ok(None);
        };
        let seed = cfg.stage_seed(Stage::Eval.name());
        let protocol = cfg.eval.protocol(seed);
        let method = if skip_transfer { "baseline" } else { "transfer" };
        let report = self.stage(Stage::Eval, |run| {
            let report = run_protocol(&emb, &labels, &protocol)?;
            let table = report.to_table(method);
            create(&run.path("report.txt"), |out| out.write_all(table.as_bytes()))?;
            create(&run.path("report.json"), |out| {
                serde_json::to_writer_pretty(&mut *out, &report)?;
                writeln!(out)
            })?;
            create(&run.path("eval_runs.jsonl"), |out| report.write_runs(out))?;
            run.record(Stage::Eval, StageStatus::Ran, Some(seed), json(&protocol))?;
            Ok(report)
        })?;
        Ok(Some(report))
    }

    /// Source walks, coarsening and target re-weighting.
    fn transfer_layer(&mut self, target: &Graph) -> Result<Graph> {
        let cfg = self.cfg;
        if self.reuse(Stage::Transfer) {
            for stage in [Stage::SourceWalks, Stage::Coarsen] {
                self.record(
                    stage,
                    StageStatus::Reused,
                    Some(cfg.stage_seed(stage.name())),
                    serde_json::Value::Null,
                )?;
            }
            return self.stage(Stage::Transfer, |run| {
                let (reweighted, _) = Graph::load_edge_list(run.path("reweighted_target.edges"), target.is_directed())?;
                let out = restore_weights(target, &reweighted)?;
                run.record(Stage::Transfer, StageStatus::Reused, None, json(&cfg.transfer))?;
                Ok(out)
            });
        }
        let source_path = cfg
            .paths
            .source_edges
            .clone()
            .ok_or_else(|| Error::Config(vec!["paths.source_edges is required".into()]))?;
        let (source, report) = Graph::load_edge_list(cfg.resolve(&source_path), cfg.paths.source_directed)?;
        log::info!("source: {} nodes, {} edges", source.node_count(), source.edge_count());
        self.input("source_edges", &source_path, Some(report))?;

        let seed = cfg.stage_seed(Stage::SourceWalks.name());
        let params = crate::walker::WalkParams {
            seed,
            ..cfg.source_walk
        };
        let source_walks = self.stage(Stage::SourceWalks, |run| {
            let path = run.path("source_walks.txt");
            let (walks, status) = if run.reuse(Stage::SourceWalks) {
                (WalkSet::load(&path, &source)?, StageStatus::Reused)
            } else {
                let walks = Walker::new(&source, params)?.walk_set();
                walks.save(&source, &path)?;
                (walks, StageStatus::Ran)
            };
            run.record(Stage::SourceWalks, status, Some(seed), json(&params))?;
            Ok(walks)
        })?;

        let seed = cfg.stage_seed(Stage::Coarsen.name());
        let max_size = cfg
            .coarsen
            .max_super_size
            .unwrap_or_else(|| supergraph::default_max_super_size(source.node_count(), target.node_count()));
        let coarsen = crate::transfer::CoarsenParams {
            seed,
            max_super_size: Some(max_size),
            ..cfg.coarsen
        };
        let sg = self.stage(Stage::Coarsen, |run| {
            let path = run.path("supergraph.txt");
            let (sg, status) = if run.reuse(Stage::Coarsen) {
                (SuperGraph::load(&path, &source)?, StageStatus::Reused)
            } else {
                let sg = supergraph::coarsen(&source, coarsen.method, max_size, seed)?;
                sg.save(&source, &path)?;
                (sg, StageStatus::Ran)
            };
            log::info!(
                "super-graph: {} super-nodes, {} super-edges",
                sg.len(),
                sg.super_edge_count()
            );
            run.record(Stage::Coarsen, status, Some(seed), json(&coarsen))?;
            Ok(sg)
        })?;

        self.stage(Stage::Transfer, |run| {
            let t = &cfg.transfer;
            let mapping = supergraph::map_all(target, &sg, t.map_mode, t.super_degree)?;
            let weights = learn_weights(&source, &sg, &source_walks, target, &mapping, t)?;
            let reweighted = reweight_target(target, &mapping, &weights);
            let stats = TransferStats {
                source_walks: source_walks.len(),
                super_nodes: sg.len(),
                super_edges: sg.super_edge_count(),
                max_super_size: max_size,
                mapped_target_nodes: mapping.covered(),
                learned_pairs: weights.pairs.len(),
                pairs_with_evidence: weights.pairs.values().filter(|s| s.eligible > 0).count(),
                beta: weights.beta,
                mean_edge_weight: mean_edge_weight(&reweighted),
                target_walks: target.node_count() * cfg.target_walk.walks_per_node,
                timings: Vec::new(),
            };
            reweighted.save_edge_list(run.path("reweighted_target.edges"))?;
            create(&run.path("transfer_stats.json"), |out| {
                serde_json::to_writer_pretty(&mut *out, &stats)?;
                writeln!(out)
            })?;
            run.record(Stage::Transfer, StageStatus::Ran, None, json(t))?;
            Ok(reweighted)
        })
    }
}

/// Runs every stage, writing artifacts, `manifest.json` and, on failure,
/// a `FAILED` marker naming the stage.
pub fn run_pipeline(cfg: &PipelineConfig, opts: &RunOptions) -> Result<PipelineOutcome> {
    let mut cfg = cfg.clone();
    cfg.skip_transfer |= opts.skip_transfer;
    if let Some(t) = opts.threads {
        cfg.threads = t;
    }
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let out = cfg.output_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let failed = out.join("FAILED");
    if failed.exists() {
        std::fs::remove_file(&failed).map_err(|e| Error::io(&failed, e))?;
    }
    let canonical = cfg.to_toml();
    create(&out.join("config.toml"), |w| w.write_all(canonical.as_bytes()))?;
    let from = match opts.from_stage {
        Some(s) if cfg.skip_transfer && s.is_transfer_layer() => Stage::TargetWalks,
        Some(s) => s,
        None => Stage::SourceWalks,
    };
    let mut run = Run {
        cfg: &cfg,
        out: out.clone(),
        from,
        manifest: Manifest {
            seed: cfg.seed,
            threads: cfg.threads,
            skip_transfer: cfg.skip_transfer,
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
            inputs: Vec::new(),
            stages: Vec::new(),
        },
        previous: opts
            .from_stage
            .and_then(|_| Manifest::load(out.join("manifest.json")).ok()),
        timings: Vec::new(),
    };
    let skip = cfg.skip_transfer;
    let result = match cfg.threads {
        0 => run.execute(skip),
        n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run.execute(skip)),
            Err(e) => Err(Error::InvalidArgument(format!("thread pool: {e}"))),
        },
    };
    run.write_manifest()?;
    match result {
        Ok(report) => Ok(PipelineOutcome {
            out_dir: out,
            manifest: run.manifest,
            report,
            timings: run.timings,
        }),
        Err(e) => {
            let stage = match &e {
                Error::Stage { stage, .. } => stage.clone(),
                _ => "setup".to_string(),
            };
            create(&failed, |w| writeln!(w, "stage: {stage}\nerror: {e}"))?;
            Err(e)
        }
    }
}
