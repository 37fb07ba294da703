//! Cross-network structure transfer for node embeddings.
//!
//! A large, densely connected *source* network lends structure to a sparse
//! *target* network. The pipeline:
//!
//! 1. biased second-order random walks on the source ([`walker`]);
//! 2. coarsening of the source into super-nodes ([`supergraph`]);
//! 3. degree-based mapping of target nodes onto super-nodes, and target edge
//!    re-weighting from inverse source distances observed in the walks
//!    ([`transfer`]);
//! 4. biased walks on the re-weighted target, Skip-gram training
//!    ([`skipgram`]) and one-vs-rest linear evaluation ([`eval`]).
//!
//! [`pipeline`] wires the stages together behind a TOML config and writes a
//! hashed manifest of every artifact. Runnable examples for each stage live
//! in this crate's `examples/` directory.

pub mod alias;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod powerlaw;
pub mod rng;
pub mod skipgram;
pub mod supergraph;
pub mod synth;
pub mod transfer;
pub mod walker;

pub use config::{validate_config, PipelineConfig};
pub use error::{Error, Result};
pub use eval::{f1_scores, run_protocol, EvalReport};
pub use graph::{Graph, GraphBuilder, IngestReport, LabelTable, NodeId};
pub use pipeline::{run_pipeline, RunOptions, Stage};
pub use skipgram::{train, EmbeddingMatrix, TrainConfig};
pub use supergraph::SuperGraph;
pub use transfer::{compute_beta, two_layer_walks, TwoLayerParams};
pub use walker::{WalkParams, WalkSet, Walker};
