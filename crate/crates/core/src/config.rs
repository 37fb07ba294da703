//! Pipeline configuration: one TOML document with a section per stage.
//!
//! Stage sections reuse the parameter types of the owning modules. Their
//! `seed` fields must stay unset because every stage seed is derived from
//! the top-level `seed` (see [`PipelineConfig::stage_seed`]). Relative paths
//! resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eval::{ClassifierParams, ProtocolParams, FRACTIONS};
use crate::rng::{derive_seed, tag_of};
use crate::skipgram::TrainConfig;
use crate::transfer::{CoarsenParams, TransferParams};
use crate::walker::WalkParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub source_edges: Option<PathBuf>,
    pub target_edges: Option<PathBuf>,
    pub target_labels: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub source_directed: bool,
    pub target_directed: bool,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            source_edges: None,
            target_edges: None,
            target_labels: None,
            output_dir: PathBuf::from("out"),
            source_directed: false,
            target_directed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub enabled: bool,
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub eta0: f64,
    pub standardize: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        let c = ClassifierParams::default();
        Self {
            enabled: true,
            fractions: FRACTIONS.to_vec(),
            repeats: 10,
            lambda: c.lambda,
            epochs: c.epochs,
            eta0: c.eta0,
            standardize: c.standardize,
        }
    }
}

impl EvalSection {
    pub fn protocol(&self, seed: u64) -> ProtocolParams {
        ProtocolParams {
            fractions: self.fractions.clone(),
            repeats: self.repeats,
            seed,
            classifier: ClassifierParams {
                lambda: self.lambda,
                epochs: self.epochs,
                eta0: self.eta0,
                standardize: self.standardize,
                seed: derive_seed(seed, tag_of("classifier")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker cap; 1 makes every stage deterministic, 0 uses all cores.
    pub threads: usize,
    /// Walk the raw target only (no source, coarsening or re-weighting).
    pub skip_transfer: bool,
    pub paths: Paths,
    pub source_walk: WalkParams,
    pub target_walk: WalkParams,
    pub coarsen: CoarsenParams,
    pub transfer: TransferParams,
    pub embed: TrainConfig,
    pub eval: EvalSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            skip_transfer: false,
            paths: Paths::default(),
            source_walk: WalkParams::default(),
            target_walk: WalkParams::default(),
            coarsen: CoarsenParams::default(),
            transfer: TransferParams::default(),
            embed: TrainConfig::default(),
            eval: EvalSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl PipelineConfig {
    /// Seed for a named stage.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, tag_of(stage))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.paths.output_dir)
    }

    /// Canonical TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Every problem found, without stopping at the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut section = |name: &str, problems: Vec<String>| {
            out.extend(problems.into_iter().map(|p| format!("{name}: {p}")));
        };
        section("target_walk", self.target_walk.problems());
        section("embed", self.embed.problems());
        if !self.skip_transfer {
            section("source_walk", self.source_walk.problems());
            section("transfer", self.transfer.problems());
            if self.coarsen.max_super_size == Some(0) {
                section("coarsen", vec!["max_super_size must be >= 1".into()]);
            }
        }
        if self.eval.enabled {
            section("eval", self.eval.protocol(0).problems());
        }
        let seeds = [
            ("source_walk", self.source_walk.seed),
            ("target_walk", self.target_walk.seed),
            ("coarsen", self.coarsen.seed),
            ("embed", self.embed.seed),
        ];
        for (name, seed) in seeds {
            if seed != 0 {
                out.push(format!(
                    "{name}: seed is derived from the top-level seed; remove {name}.seed"
                ));
            }
        }
        if self.embed.threads != 1 {
            out.push("embed: threads is set by the top-level threads; remove embed.threads".into());
        }
        let mut require = |key: &str, path: &Option<PathBuf>| match path {
            None => out.push(format!("paths.{key} is required")),
            Some(p) if !self.resolve(p).is_file() => {
                out.push(format!("paths.{key}: {} does not exist", self.resolve(p).display()))
            }
            Some(_) => {}
        };
        require("target_edges", &self.paths.target_edges);
        if !self.skip_transfer {
            require("source_edges", &self.paths.source_edges);
        }
        if self.eval.enabled {
            require("target_labels", &self.paths.target_labels);
        }
        if self.paths.output_dir.as_os_str().is_empty() {
            out.push("paths.output_dir must not be empty".into());
        }
        out
    }
}

/// Parses and checks a config file. On failure returns every problem found.
pub fn validate_config(path: impl AsRef<Path>) -> std::result::Result<PipelineConfig, Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let mut cfg = PipelineConfig::from_toml(&text).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    cfg.base_dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let problems = cfg.problems();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(problems)
    }
}
