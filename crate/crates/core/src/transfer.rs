//! Top layer of the two-layer walk: learn target edge weights from source
//! walks, then walk the re-weighted target.
//!
//! For super-nodes `A` and `B` the learned weight is the geometric mean of
//! `1 / d(v, x)` over member pairs `v in A`, `x in B` that co-occur in at
//! least one source walk, where `d` is the hop distance on the source graph
//! (pairs at distance 0 or beyond the cap are skipped; no eligible pair gives
//! 0). A target edge `(v, x)` then gets the mean over its mapped super-node
//! pairs of
//!
//! ```text
//! beta * learned(A, B) + (1 - beta) * virtual_weight,   beta = |Vt| / (|Vs| + |Vt|)
//! ```

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BfsScratch, Graph, NodeId, DEFAULT_DISTANCE_CAP};
use crate::supergraph::{self, CoarsenMethod, MapMode, NodeMapping, SuperDegree, SuperGraph};
use crate::walker::{WalkParams, WalkSet, Walker};

/// `|Vt| / (|Vs| + |Vt|)`.
pub fn compute_beta(target_size: usize, source_size: usize) -> Result<f64> {
    if target_size == 0 || source_size == 0 {
        return Err(Error::InvalidArgument("beta needs non-zero network sizes".into()));
    }
    Ok(target_size as f64 / (source_size as f64 + target_size as f64))
}

/// Which source size enters beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BetaScope {
    /// Node count of the whole source network.
    #[default]
    WholeSource,
    /// Combined member count of the two super-nodes of each pair.
    SuperNodePair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferParams {
    pub distance_cap: u32,
    pub virtual_weight: f64,
    pub beta_scope: BetaScope,
    /// Fixed beta in `[0, 1]`, for testing.
    pub beta_override: Option<f64>,
    pub map_mode: MapMode,
    pub super_degree: SuperDegree,
}

impl Default for TransferParams {
    fn default() -> Self {
        Self {
            distance_cap: DEFAULT_DISTANCE_CAP,
            virtual_weight: 1.0,
            beta_scope: BetaScope::WholeSource,
            beta_override: None,
            map_mode: MapMode::Nearest,
            super_degree: SuperDegree::Adjacent,
        }
    }
}

impl TransferParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.distance_cap < 1 {
            out.push("distance_cap must be >= 1".to_string());
        }
        if !(self.virtual_weight > 0.0 && self.virtual_weight.is_finite()) {
            out.push("virtual_weight must be positive".to_string());
        }
        if let Some(b) = self.beta_override {
            if !(0.0..=1.0).contains(&b) {
                out.push("beta_override must lie in [0, 1]".to_string());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoarsenParams {
    pub method: CoarsenMethod,
    /// `None` selects `ceil(|Vs| / |Vt|)`.
    pub max_super_size: Option<usize>,
    pub seed: u64,
}

impl Default for CoarsenParams {
    fn default() -> Self {
        Self {
            method: CoarsenMethod::LabelPropagation,
            max_super_size: None,
            seed: 0,
        }
    }
}

/// Learned weight of one super-node pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    /// Geometric mean of `1/d` in `[0, 1]`.
    pub learned: f64,
    /// Raw `sum log(1/d)` over eligible pairs.
    pub log_sum: f64,
    pub eligible: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferWeights {
    pub pairs: HashMap<(u32, u32), PairStats>,
    /// Beta for pairs without an entry (and for every pair under `WholeSource`).
    pub beta: f64,
    pub virtual_weight: f64,
    pub distance_cap: u32,
    directed: bool,
}

impl TransferWeights {
    fn key(&self, a: u32, b: u32) -> (u32, u32) {
        if self.directed || a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn get(&self, a: u32, b: u32) -> Option<&PairStats> {
        self.pairs.get(&self.key(a, b))
    }

    pub fn learned(&self, a: u32, b: u32) -> f64 {
        self.get(a, b).map_or(0.0, |s| s.learned)
    }

    /// `beta * learned + (1 - beta) * virtual_weight`; unlearned pairs count
    /// as `learned = 0`.
    pub fn combined_weight(&self, a: u32, b: u32) -> f64 {
        let (beta, learned) = self.get(a, b).map_or((self.beta, 0.0), |s| (s.beta, s.learned));
        beta * learned + (1.0 - beta) * self.virtual_weight
    }
}

/// Free-function form of [`TransferWeights::combined_weight`].
pub fn combined_weight(tw: &TransferWeights, a: u32, b: u32) -> f64 {
    tw.combined_weight(a, b)
}

/// Unordered node pairs that appear together in a walk, restricted to pairs
/// whose super-nodes form one of the `needed` super-node pairs.
struct CoOccurrence {
    pairs: HashSet<(NodeId, NodeId)>,
}

enum PairFilter {
    Dense { n: usize, bits: Vec<u64> },
    Sparse(HashSet<(u32, u32)>),
}

impl PairFilter {
    fn new(n: usize, needed: &[(u32, u32)]) -> Self {
        if n <= 16_384 {
            let mut bits = vec![0u64; (n * n).div_ceil(64)];
            for &(a, b) in needed {
                for (x, y) in [(a, b), (b, a)] {
                    let i = x as usize * n + y as usize;
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            PairFilter::Dense { n, bits }
        } else {
            PairFilter::Sparse(needed.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect())
        }
    }

    fn contains(&self, a: u32, b: u32) -> bool {
        match self {
            PairFilter::Dense { n, bits } => {
                let i = a as usize * n + b as usize;
                bits[i / 64] >> (i % 64) & 1 == 1
            }
            PairFilter::Sparse(set) => set.contains(&(a, b)),
        }
    }
}

impl CoOccurrence {
    fn build(sg: &SuperGraph, walks: &WalkSet, needed: &[(u32, u32)]) -> Self {
        let mut involved = vec![false; sg.len()];
        for &(a, b) in needed {
            involved[a as usize] = true;
            involved[b as usize] = true;
        }
        let filter = PairFilter::new(sg.len(), needed);
        let pairs = walks
            .walks
            .par_iter()
            .fold(
                || (HashSet::new(), Vec::new()),
                |(mut set, mut nodes): (HashSet<(NodeId, NodeId)>, Vec<NodeId>), walk| {
                    nodes.clear();
                    nodes.extend(walk.iter().copied().filter(|&v| involved[sg.super_node_of(v) as usize]));
                    nodes.sort_unstable();
                    nodes.dedup();
                    for (i, &v) in nodes.iter().enumerate() {
                        let sv = sg.super_node_of(v);
                        for &x in &nodes[i + 1..] {
                            let sx = sg.super_node_of(x);
                            if sv != sx && filter.contains(sv, sx) {
                                set.insert((v, x));
                            }
                        }
                    }
                    (set, nodes)
                },
            )
            .map(|(set, _)| set)
            .reduce(HashSet::new, |mut a, b| {
                if a.len() < b.len() {
                    return b.into_iter().chain(a).collect();
                }
                a.extend(b);
                a
            });
        Self { pairs }
    }

    fn contains(&self, v: NodeId, x: NodeId) -> bool {
        self.pairs.contains(&(v.min(x), v.max(x)))
    }
}

/// Hop distances for ordered node pairs.
fn distances(
    source: &Graph,
    queries: impl Iterator<Item = (NodeId, NodeId)>,
    cap: u32,
) -> HashMap<(NodeId, NodeId), Option<u32>> {
    let mut by_source: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for (v, x) in queries {
        by_source.entry(v).or_default().push(x);
    }
    let groups: Vec<(NodeId, Vec<NodeId>)> = by_source.into_iter().collect();
    let n = source.node_count();
    groups
        .par_iter()
        .map_init(
            || BfsScratch::new(n),
            |scratch, (v, xs)| {
                scratch.run(source, *v, cap);
                xs.iter().map(|&x| ((*v, x), scratch.distance(x))).collect::<Vec<_>>()
            },
        )
        .flatten_iter()
        .collect()
}

/// Accumulates `log(1/d)` over member pairs in ascending `(v, x)` order.
fn accumulate<E, D>(members_a: &[NodeId], members_b: &[NodeId], eligible: E, distance: D, cap: u32) -> (f64, f64, usize)
where
    E: Fn(NodeId, NodeId) -> bool,
    D: Fn(NodeId, NodeId) -> Option<u32>,
{
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for &v in members_a {
        for &x in members_b {
            if !eligible(v, x) {
                continue;
            }
            match distance(v, x) {
                Some(d) if d >= 1 && d <= cap => {
                    log_sum += (1.0 / d as f64).ln();
                    count += 1;
                }
                _ => {}
            }
        }
    }
    let learned = if count == 0 {
        0.0
    } else {
        (log_sum / count as f64).exp()
    };
    (learned, log_sum, count)
}

fn canonical(directed: bool, a: u32, b: u32) -> (u32, u32) {
    if directed || a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn learn_pairs(
    source: &Graph,
    sg: &SuperGraph,
    walks: &WalkSet,
    needed: &[(u32, u32)],
    cap: u32,
) -> HashMap<(u32, u32), (f64, f64, usize)> {
    let co = CoOccurrence::build(sg, walks, needed);
    let queries: HashSet<(NodeId, NodeId)> = needed
        .iter()
        .flat_map(|&(a, b)| {
            let co = &co;
            sg.members(a).iter().flat_map(move |&v| {
                sg.members(b)
                    .iter()
                    .filter(move |&&x| co.contains(v, x))
                    .map(move |&x| {
                        if source.is_directed() {
                            (v, x)
                        } else {
                            (v.min(x), v.max(x))
                        }
                    })
            })
        })
        .collect();
    log::debug!(
        "{} co-occurring member pairs, {} distance queries",
        co.pairs.len(),
        queries.len()
    );
    let dist = distances(source, queries.into_iter(), cap);
    let directed = source.is_directed();
    let lookup = |v: NodeId, x: NodeId| {
        let key = if directed { (v, x) } else { (v.min(x), v.max(x)) };
        dist.get(&key).copied().flatten()
    };
    needed
        .par_iter()
        .map(|&(a, b)| {
            let stats = accumulate(sg.members(a), sg.members(b), |v, x| co.contains(v, x), lookup, cap);
            ((a, b), stats)
        })
        .collect()
}

/// Learned weight of one super-node pair, computed directly from the walks.
pub fn pair_weight(source: &Graph, sg: &SuperGraph, walks: &WalkSet, a: usize, b: usize, cap: u32) -> Result<f64> {
    for s in [a, b] {
        if s >= sg.len() {
            return Err(Error::InvalidSuperNode { id: s, count: sg.len() });
        }
    }
    if a == b {
        return Err(Error::InvalidArgument(
            "pair_weight needs two distinct super-nodes".into(),
        ));
    }
    let key = canonical(source.is_directed(), a as u32, b as u32);
    Ok(learn_pairs(source, sg, walks, &[key], cap)[&key].0)
}

/// Super-node pairs touched by target edges under `mapping`.
pub fn needed_pairs(target: &Graph, mapping: &NodeMapping, directed_source: bool) -> Vec<(u32, u32)> {
    let mut set = HashSet::new();
    for (v, x, _) in target.edges() {
        for &a in mapping.get(v) {
            for &b in mapping.get(x) {
                if a != b {
                    set.insert(canonical(directed_source, a, b));
                }
            }
        }
    }
    let mut out: Vec<_> = set.into_iter().collect();
    out.sort_unstable();
    out
}

/// Learns weights for every super-node pair that a target edge maps onto.
pub fn learn_weights(
    source: &Graph,
    sg: &SuperGraph,
    source_walks: &WalkSet,
    target: &Graph,
    mapping: &NodeMapping,
    params: &TransferParams,
) -> Result<TransferWeights> {
    let global_beta = match params.beta_override {
        Some(b) => b,
        None => compute_beta(target.node_count(), source.node_count())?,
    };
    let needed = needed_pairs(target, mapping, source.is_directed());
    let learned = learn_pairs(source, sg, source_walks, &needed, params.distance_cap);
    let pairs = learned
        .into_iter()
        .map(|((a, b), (value, log_sum, eligible))| {
            let beta = match (params.beta_override, params.beta_scope) {
                (Some(b), _) => b,
                (None, BetaScope::WholeSource) => global_beta,
                (None, BetaScope::SuperNodePair) => {
                    let size = sg.members(a).len() + sg.members(b).len();
                    compute_beta(target.node_count(), size)?
                }
            };
            Ok((
                (a, b),
                PairStats {
                    learned: value,
                    log_sum,
                    eligible,
                    beta,
                },
            ))
        })
        .collect::<Result<_>>()?;
    Ok(TransferWeights {
        pairs,
        beta: global_beta,
        virtual_weight: params.virtual_weight,
        distance_cap: params.distance_cap,
        directed: source.is_directed(),
    })
}

/// Copy of `target` whose edge weights come from the mapped super-node pairs.
/// Edges whose endpoints share no distinct mapped pair keep `virtual_weight`.
pub fn reweight_target(target: &Graph, mapping: &NodeMapping, tw: &TransferWeights) -> Graph {
    target.with_weights(|v, x, _| {
        let mut total = 0.0;
        let mut count = 0usize;
        for &a in mapping.get(v) {
            for &b in mapping.get(x) {
                if a != b {
                    total += tw.combined_weight(a, b);
                    count += 1;
                }
            }
        }
        if count == 0 {
            tw.virtual_weight
        } else {
            total / count as f64
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoLayerParams {
    pub source_walk: WalkParams,
    pub target_walk: WalkParams,
    pub coarsen: CoarsenParams,
    pub transfer: TransferParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransferStats {
    pub source_walks: usize,
    pub super_nodes: usize,
    pub super_edges: usize,
    pub max_super_size: usize,
    pub mapped_target_nodes: usize,
    pub learned_pairs: usize,
    pub pairs_with_evidence: usize,
    pub beta: f64,
    pub mean_edge_weight: f64,
    pub target_walks: usize,
    #[serde(skip)]
    pub timings: Vec<(&'static str, Duration)>,
}

/// Everything produced by [`two_layer_walks`].
pub struct TransferOutcome {
    pub source_walks: WalkSet,
    pub super_graph: SuperGraph,
    pub mapping: NodeMapping,
    pub weights: TransferWeights,
    pub reweighted: Graph,
    pub target_walks: WalkSet,
    pub stats: TransferStats,
}

/// Mean edge weight of `graph`, 0 for edgeless graphs.
pub fn mean_edge_weight(graph: &Graph) -> f64 {
    let (sum, n) = graph.edges().fold((0.0, 0usize), |(s, n), (_, _, w)| (s + w, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Source walks, coarsening, node mapping, walk mapping and target walks in
/// sequence. Returns the target walk set together with every intermediate.
pub fn two_layer_walks(source: &Graph, target: &Graph, params: &TwoLayerParams) -> Result<TransferOutcome> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::InvalidArgument("source and target must be non-empty".into()));
    }
    let problems = params.transfer.problems();
    if !problems.is_empty() {
        return Err(Error::InvalidArgument(problems.join("; ")));
    }
    let mut stats = TransferStats::default();
    let mut clock = Instant::now();
    let mut lap = |stats: &mut TransferStats, name: &'static str| {
        let elapsed = clock.elapsed();
        log::info!("{name}: {:.3}s", elapsed.as_secs_f64());
        stats.timings.push((name, elapsed));
        clock = Instant::now();
    };

    let source_walks = Walker::new(source, params.source_walk)?.walk_set();
    stats.source_walks = source_walks.len();
    lap(&mut stats, "source walks");

    let max_size = params
        .coarsen
        .max_super_size
        .unwrap_or_else(|| supergraph::default_max_super_size(source.node_count(), target.node_count()));
    let sg = supergraph::coarsen(source, params.coarsen.method, max_size, params.coarsen.seed)?;
    stats.super_nodes = sg.len();
    stats.super_edges = sg.super_edge_count();
    stats.max_super_size = max_size;
    lap(&mut stats, "coarsen");

    let mapping = supergraph::map_all(target, &sg, params.transfer.map_mode, params.transfer.super_degree)?;
    stats.mapped_target_nodes = mapping.covered();
    lap(&mut stats, "node mapping");

    let weights = learn_weights(source, &sg, &source_walks, target, &mapping, &params.transfer)?;
    let reweighted = reweight_target(target, &mapping, &weights);
    stats.learned_pairs = weights.pairs.len();
    stats.pairs_with_evidence = weights.pairs.values().filter(|s| s.eligible > 0).count();
    stats.beta = weights.beta;
    stats.mean_edge_weight = mean_edge_weight(&reweighted);
    lap(&mut stats, "walk mapping");

    let target_walks = Walker::new(&reweighted, params.target_walk)?.walk_set();
    stats.target_walks = target_walks.len();
    lap(&mut stats, "target walks");

    Ok(TransferOutcome {
        source_walks,
        super_graph: sg,
        mapping,
        weights,
        reweighted,
        target_walks,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::walker::transition_distribution;
    use proptest::prelude::*;

    #[test]
    fn beta_values() {
        let b = compute_beta(10310, 60744).unwrap();
        assert!((b - 10310.0 / 71054.0).abs() < 1e-15);
        assert!((b - 0.145101).abs() < 1e-6);
        assert_eq!(compute_beta(7, 7).unwrap(), 0.5);
        assert!((compute_beta(1, 1_000_000).unwrap() - 1e-6).abs() < 1e-9);
        assert!(compute_beta(0, 3).is_err());
    }

    fn weights_with(learned: f64, beta: f64, virtual_weight: f64) -> TransferWeights {
        TransferWeights {
            pairs: HashMap::from([(
                (0, 1),
                PairStats {
                    learned,
                    log_sum: 0.0,
                    eligible: 1,
                    beta,
                },
            )]),
            beta,
            virtual_weight,
            distance_cap: 10,
            directed: false,
        }
    }

    #[test]
    fn combined_weight_cases() {
        let tw = weights_with(0.0, 0.3, 1.0);
        assert!((tw.combined_weight(0, 1) - 0.7).abs() < 1e-15);
        assert_eq!(weights_with(1.0, 0.3, 1.0).combined_weight(1, 0), 1.0);
        let tw = weights_with(0.5, 0.145101, 1.0);
        assert!((tw.combined_weight(0, 1) - 0.9274495).abs() < 1e-12);
    }

    /// path 0-1-2-3 split into {0}, {1}, {2,3}
    fn path_fixture() -> (Graph, SuperGraph) {
        let g = Graph::from_pairs(4, false, &[(0, 1), (1, 2), (2, 3)]);
        let sg = SuperGraph::from_partition(&g, &[0, 1, 2, 2]);
        (g, sg)
    }

    fn walks(list: &[&[NodeId]]) -> WalkSet {
        WalkSet {
            walks: list.iter().map(|w| w.to_vec()).collect(),
            ..WalkSet::default()
        }
    }

    #[test]
    fn pair_weight_cases() {
        let (g, sg) = path_fixture();
        // only 0 and 2 co-occur: d = 2
        let ws = walks(&[&[0, 1], &[2, 3], &[0, 2]]);
        assert_eq!(pair_weight(&g, &sg, &ws, 0, 2, 10).unwrap(), 0.5);
        // all eligible pairs adjacent
        let ws = walks(&[&[0, 1], &[1, 2, 3]]);
        assert_eq!(pair_weight(&g, &sg, &ws, 0, 1, 10).unwrap(), 1.0);
        assert_eq!(pair_weight(&g, &sg, &ws, 1, 2, 10).unwrap(), (0.5f64.ln() / 2.0).exp());
        // no co-occurrence
        let ws = walks(&[&[0], &[2, 3]]);
        assert_eq!(pair_weight(&g, &sg, &ws, 0, 2, 10).unwrap(), 0.0);
        // beyond the cap
        let ws = walks(&[&[0, 2]]);
        assert_eq!(pair_weight(&g, &sg, &ws, 0, 2, 1).unwrap(), 0.0);
        assert!(pair_weight(&g, &sg, &ws, 0, 9, 10).is_err());
        assert!(pair_weight(&g, &sg, &ws, 1, 1, 10).is_err());
        assert_eq!(
            pair_weight(&g, &sg, &ws, 2, 0, 10).unwrap(),
            pair_weight(&g, &sg, &ws, 0, 2, 10).unwrap()
        );
    }

    #[test]
    fn reweight_fallbacks() {
        let target = Graph::from_pairs(3, false, &[(0, 1), (1, 2)]);
        let tw = weights_with(0.5, 0.25, 1.0);
        let empty = NodeMapping {
            lists: vec![vec![], vec![], vec![]],
            mode: MapMode::Exact,
        };
        assert_eq!(reweight_target(&target, &empty, &tw), target);

        let mapping = NodeMapping {
            lists: vec![vec![0], vec![1], vec![1]],
            mode: MapMode::Exact,
        };
        let out = reweight_target(&target, &mapping, &tw);
        assert_eq!(out.edge_weight(0, 1), Some(0.25 * 0.5 + 0.75));
        assert_eq!(out.edge_weight(1, 0), Some(0.25 * 0.5 + 0.75));
        assert_eq!(out.edge_weight(1, 2), Some(1.0));
    }

    #[test]
    fn no_evidence_collapses_to_constant() {
        let (source, _) = synth::disjoint_cliques(2, 4);
        let target = synth::ring(6);
        let params = TwoLayerParams {
            source_walk: WalkParams {
                walk_length: 10,
                walks_per_node: 2,
                ..WalkParams::default()
            },
            target_walk: WalkParams {
                walk_length: 10,
                walks_per_node: 2,
                ..WalkParams::default()
            },
            coarsen: CoarsenParams {
                max_super_size: Some(4),
                ..CoarsenParams::default()
            },
            transfer: TransferParams::default(),
        };
        let out = two_layer_walks(&source, &target, &params).unwrap();
        // each clique is one isolated super-node; walks never join them
        assert_eq!(out.super_graph.len(), 2);
        assert!(out.weights.pairs.values().all(|s| s.learned == 0.0));
        let beta = out.weights.beta;
        for (_, _, w) in out.reweighted.edges() {
            assert!((w - (1.0 - beta)).abs() < 1e-15);
        }
    }

    #[test]
    fn walk_lengths_follow_layer_params() {
        let source = synth::barabasi_albert(120, 2, 5);
        let target = synth::barabasi_albert(30, 2, 6);
        let params = TwoLayerParams {
            source_walk: WalkParams {
                walk_length: 40,
                walks_per_node: 2,
                ..WalkParams::default()
            },
            target_walk: WalkParams {
                walk_length: 80,
                walks_per_node: 2,
                ..WalkParams::default()
            },
            ..TwoLayerParams::default()
        };
        let out = two_layer_walks(&source, &target, &params).unwrap();
        assert!(out.source_walks.walks.iter().all(|w| w.len() == 40));
        assert!(out.target_walks.walks.iter().all(|w| w.len() == 80));
        assert_eq!(out.target_walks.len(), 60);
        for (_, _, w) in out.reweighted.edges() {
            assert!(w > 0.0 && w <= 1.0);
        }
    }

    proptest! {
        #[test]
        fn convexity_and_beta_monotonicity(learned in 0.0f64..1.0, virtual_weight in 0.1f64..5.0, t in 1usize..500, s in 1usize..500) {
            let beta = compute_beta(t, s).unwrap();
            prop_assert!(beta > 0.0 && beta < 1.0);
            prop_assert!(compute_beta(t, s + 1).unwrap() < beta);
            let w = weights_with(learned, beta, virtual_weight).combined_weight(0, 1);
            prop_assert!(w >= learned.min(virtual_weight) - 1e-12 && w <= learned.max(virtual_weight) + 1e-12);
        }

        #[test]
        fn scaling_leaves_transitions_unchanged(scale in 0.1f64..10.0, seed in 0u64..20) {
            let source = synth::barabasi_albert(40, 2, seed);
            let target = synth::barabasi_albert(15, 2, seed + 1);
            let sg = supergraph::coarsen(&source, CoarsenMethod::LabelPropagation, 3, seed).unwrap();
            let walks = Walker::new(&source, WalkParams { walk_length: 10, walks_per_node: 2, seed, ..WalkParams::default() })
                .unwrap()
                .walk_set();
            let mapping = supergraph::map_all(&target, &sg, MapMode::Nearest, SuperDegree::Adjacent).unwrap();
            let tw = learn_weights(&source, &sg, &walks, &target, &mapping, &TransferParams::default()).unwrap();
            let mut scaled = tw.clone();
            scaled.virtual_weight *= scale;
            for s in scaled.pairs.values_mut() {
                s.learned *= scale;
            }
            let a = reweight_target(&target, &mapping, &tw);
            let b = reweight_target(&target, &mapping, &scaled);
            prop_assert_eq!(a.edge_count(), target.edge_count());
            let wp = WalkParams { p: 0.5, q: 2.0, ..WalkParams::default() };
            for cur in 0..target.node_count() {
                for &prev in target.neighbors(cur as NodeId) {
                    let da = transition_distribution(&a, Some(prev as usize), cur, &wp).unwrap();
                    let db = transition_distribution(&b, Some(prev as usize), cur, &wp).unwrap();
                    for (x, y) in da.probs.iter().zip(&db.probs) {
                        prop_assert!((x - y).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
