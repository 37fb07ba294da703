//! Fixtures and brute-force oracles shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::path::Path;

use structxfer::config::PipelineConfig;
use structxfer::graph::{Graph, LabelTable, NodeId};
use structxfer::skipgram::TrainConfig;
use structxfer::supergraph::{NodeMapping, SuperGraph};
use structxfer::synth;
use structxfer::walker::{WalkParams, WalkSet};

/// Six-node source: path 0-1-2-3-4-5 with chord 1-4, split into
/// {0,1}, {2,3}, {4,5}. Four-node target: path a-b-c-d.
pub fn transfer_fixture() -> (Graph, SuperGraph, Graph) {
    let source = Graph::from_pairs(6, false, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)]);
    let sg = SuperGraph::from_partition(&source, &[0, 0, 1, 1, 2, 2]);
    let target = Graph::from_pairs(4, false, &[(0, 1), (1, 2), (2, 3)]);
    (source, sg, target)
}

/// All-pairs hop distances by Floyd-Warshall; `None` when unreachable.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = Some(0);
        for &x in g.neighbors(v as NodeId) {
            row[x as usize] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Learned weight of super-nodes `a < b` by direct enumeration: every member
/// pair, a linear scan of every walk for co-occurrence, table distances.
pub fn oracle_pair_weight(source: &Graph, sg: &SuperGraph, walks: &WalkSet, a: u32, b: u32, cap: u32) -> f64 {
    let dist = floyd_warshall(source);
    let mut va: Vec<NodeId> = sg.members(a).to_vec();
    let mut vb: Vec<NodeId> = sg.members(b).to_vec();
    va.sort_unstable();
    vb.sort_unstable();
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for &v in &va {
        for &x in &vb {
            let together = walks.walks.iter().any(|w| w.contains(&v) && w.contains(&x));
            if !together {
                continue;
            }
            if let Some(d) = dist[v as usize][x as usize] {
                if d >= 1 && d <= cap {
                    log_sum += (1.0 / d as f64).ln();
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        (log_sum / count as f64).exp()
    }
}

/// Re-weighted target edges `(v, x, w)` with `v < x`, by enumeration.
pub fn oracle_reweight(
    source: &Graph,
    sg: &SuperGraph,
    walks: &WalkSet,
    target: &Graph,
    mapping: &NodeMapping,
    cap: u32,
    virtual_weight: f64,
) -> Vec<(NodeId, NodeId, f64)> {
    let beta = target.node_count() as f64 / (source.node_count() as f64 + target.node_count() as f64);
    let mut out = Vec::new();
    for v in 0..target.node_count() as NodeId {
        for &x in target.neighbors(v) {
            if x <= v {
                continue;
            }
            let mut total = 0.0;
            let mut count = 0usize;
            for &a in mapping.get(v) {
                for &b in mapping.get(x) {
                    if a != b {
                        let learned = oracle_pair_weight(source, sg, walks, a.min(b), a.max(b), cap);
                        total += beta * learned + (1.0 - beta) * virtual_weight;
                        count += 1;
                    }
                }
            }
            let w = if count == 0 {
                virtual_weight
            } else {
                total / count as f64
            };
            out.push((v, x, w));
        }
    }
    out
}

pub fn walk_set(walks: &[&[NodeId]]) -> WalkSet {
    WalkSet {
        walks: walks.iter().map(|w| w.to_vec()).collect(),
        ..WalkSet::default()
    }
}

/// Writes `graph` and `labels` as `<stem>.edges` / `<stem>.labels`.
pub fn write_dataset(dir: &Path, stem: &str, graph: &Graph, labels: Option<&LabelTable>) {
    graph.save_edge_list(dir.join(format!("{stem}.edges"))).unwrap();
    if let Some(labels) = labels {
        let mut text = String::new();
        for v in labels.labeled_nodes() {
            text += &format!("{} {}\n", graph.label(v), labels.get(v).unwrap());
        }
        std::fs::write(dir.join(format!("{stem}.labels")), text).unwrap();
    }
}

/// Small source/target pair in `dir` and a fast config pointing at it.
pub fn small_pipeline(dir: &Path, seed: u64) -> PipelineConfig {
    let (source, _) = synth::stochastic_block_model(&[60, 60], 0.15, 0.01, 1);
    let (target, labels) = synth::stochastic_block_model(&[20, 20], 0.3, 0.02, 2);
    write_dataset(dir, "source", &source, None);
    write_dataset(dir, "target", &target, Some(&labels));
    let walk = WalkParams {
        walk_length: 20,
        walks_per_node: 4,
        ..WalkParams::default()
    };
    let mut cfg = PipelineConfig {
        seed,
        threads: 1,
        source_walk: walk,
        target_walk: walk,
        embed: TrainConfig {
            dim: 8,
            epochs: 2,
            window: 4,
            ..TrainConfig::default()
        },
        base_dir: dir.to_path_buf(),
        ..PipelineConfig::default()
    };
    cfg.paths.source_edges = Some("source.edges".into());
    cfg.paths.target_edges = Some("target.edges".into());
    cfg.paths.target_labels = Some("target.labels".into());
    cfg.paths.output_dir = "out".into();
    cfg.eval.repeats = 2;
    cfg.eval.epochs = 20;
    cfg
}

/// Chi-square homogeneity test of two count vectors over the same outcomes;
/// returns the p-value.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        for (obs, n) in [(x as f64, na), (y as f64, nb)] {
            let exp = col * n / (na + nb);
            stat += (obs - exp).powi(2) / exp;
        }
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Next-step counts out of `cur` over all walks, indexed by neighbor rank.
pub fn next_step_counts(graph: &Graph, walks: &WalkSet, cur: NodeId) -> Vec<u64> {
    let nbrs = graph.neighbors(cur);
    let mut counts = vec![0u64; nbrs.len()];
    for w in &walks.walks {
        for pair in w.windows(2) {
            if pair[0] == cur {
                let i = nbrs.binary_search(&pair[1]).expect("walk follows edges");
                counts[i] += 1;
            }
        }
    }
    counts
}
