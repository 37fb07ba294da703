//! Second-order biased random walks.
//!
//! From `cur`, reached from `prev`, the unnormalised mass of neighbor `x` is
//! `alpha(prev, x) * w(cur, x)` where `alpha` is `1/p` when `x == prev`, `1`
//! when `x` is adjacent to `prev`, and `1/q` otherwise. The first step of a
//! walk has no previous node and uses `alpha = 1`. Walks stop early at nodes
//! with no outgoing mass.
//!
//! Walk ordinal `i` (round `i / |V|`) draws from stream `i` of the walk seed,
//! see [`crate::rng`]. Parallel and serial generation produce identical sets.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng;

/// Alias tables are precomputed when the total table size stays under this
/// many entries; larger graphs build each step's table on the fly.
pub const DEFAULT_TABLE_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkParams {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            seed: 0,
        }
    }
}

impl WalkParams {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.p > 0.0 && self.p.is_finite()) {
            out.push("p must be positive".to_string());
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            out.push("q must be positive".to_string());
        }
        if self.walk_length < 1 {
            out.push("walk_length must be >= 1".to_string());
        }
        if self.walks_per_node < 1 {
            out.push("walks_per_node must be >= 1".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

/// Probability of each next node; nodes not listed have probability 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDistribution {
    pub nodes: Vec<NodeId>,
    pub probs: Vec<f64>,
}

impl TransitionDistribution {
    pub fn prob_of(&self, v: NodeId) -> f64 {
        self.nodes.iter().position(|&x| x == v).map_or(0.0, |i| self.probs[i])
    }
}

fn search_bias(graph: &Graph, prev: Option<NodeId>, x: NodeId, p: f64, q: f64) -> f64 {
    match prev {
        None => 1.0,
        Some(t) if t == x => 1.0 / p,
        Some(t) if graph.has_edge(t, x) => 1.0,
        Some(_) => 1.0 / q,
    }
}

fn transition_masses(graph: &Graph, prev: Option<NodeId>, cur: NodeId, p: f64, q: f64) -> Vec<f64> {
    graph
        .neighbors(cur)
        .iter()
        .zip(graph.neighbor_weights(cur))
        .map(|(&x, &w)| search_bias(graph, prev, x, p, q) * w)
        .collect()
}

/// Normalised next-step distribution from `cur` given the previous node.
pub fn transition_distribution(
    graph: &Graph,
    prev: Option<usize>,
    cur: usize,
    params: &WalkParams,
) -> Result<TransitionDistribution> {
    let cur = graph.check_node(cur)?;
    let prev = prev.map(|t| graph.check_node(t)).transpose()?;
    if let Some(t) = prev {
        if !graph.has_edge(t, cur) {
            return Err(Error::InvalidArgument(format!(
                "previous node {t} is not adjacent to {cur}"
            )));
        }
    }
    let masses = transition_masses(graph, prev, cur, params.p, params.q);
    let z: f64 = masses.iter().sum();
    if masses.is_empty() || z <= 0.0 {
        return Err(Error::EmptyDistribution(cur as usize));
    }
    Ok(TransitionDistribution {
        nodes: graph.neighbors(cur).to_vec(),
        probs: masses.iter().map(|m| m / z).collect(),
    })
}

/// Draws one node from `dist`.
pub fn sample_next<R: Rng + ?Sized>(dist: &TransitionDistribution, rng: &mut R) -> Result<NodeId> {
    let table = AliasTable::new(&dist.probs).ok_or(Error::EmptyDistribution(usize::MAX))?;
    Ok(dist.nodes[table.sample(rng)])
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSet {
    pub walks: Vec<Vec<NodeId>>,
    /// Free-form provenance tag naming the graph the walks came from.
    pub source: String,
    /// Walks that stopped before `walk_length` at a node without outgoing mass.
    pub truncated: usize,
}

impl WalkSet {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// One walk per line, external ids separated by single spaces.
    pub fn write<W: Write>(&self, graph: &Graph, mut out: W) -> std::io::Result<()> {
        for walk in &self.walks {
            let mut first = true;
            for &v in walk {
                if !first {
                    out.write_all(b" ")?;
                }
                out.write_all(graph.label(v).as_bytes())?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write(graph, &mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read<R: BufRead>(reader: R, graph: &Graph, origin: &str) -> Result<WalkSet> {
        let mut walks = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let walk: Vec<NodeId> = line
                .split_whitespace()
                .map(|tok| graph.require_id(tok))
                .collect::<Result<_>>()?;
            if !walk.is_empty() {
                walks.push(walk);
            }
        }
        Ok(WalkSet {
            walks,
            source: origin.to_string(),
            truncated: 0,
        })
    }

    pub fn load(path: impl AsRef<Path>, graph: &Graph) -> Result<WalkSet> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), graph, &path.display().to_string())
    }
}

enum Tables {
    /// One table per directed edge `(prev, cur)` at CSR position of `cur` in
    /// `prev`'s list, plus one first-step table per node.
    Precomputed {
        edge: Vec<Option<AliasTable>>,
        first: Vec<Option<AliasTable>>,
    },
    OnTheFly,
}

/// Walk generator bound to one graph and parameter set.
pub struct Walker<'g> {
    graph: &'g Graph,
    params: WalkParams,
    tables: Tables,
}

impl<'g> Walker<'g> {
    pub fn new(graph: &'g Graph, params: WalkParams) -> Result<Self> {
        Self::with_budget(graph, params, DEFAULT_TABLE_BUDGET)
    }

    /// `budget` caps the number of precomputed alias entries; 0 disables
    /// precomputation. Draws are identical either way.
    pub fn with_budget(graph: &'g Graph, params: WalkParams, budget: usize) -> Result<Self> {
        params.validate()?;
        let n = graph.node_count() as NodeId;
        let needed: usize = (0..n)
            .map(|u| graph.neighbors(u).iter().map(|&v| graph.out_degree(v)).sum::<usize>())
            .sum();
        let tables = if budget > 0 && needed <= budget {
            let (p, q) = (params.p, params.q);
            let edge: Vec<Option<AliasTable>> = (0..n)
                .into_par_iter()
                .flat_map_iter(|u| {
                    graph
                        .neighbors(u)
                        .iter()
                        .map(move |&v| AliasTable::new(&transition_masses(graph, Some(u), v, p, q)))
                        .collect::<Vec<_>>()
                })
                .collect();
            let first = (0..n)
                .into_par_iter()
                .map(|u| AliasTable::new(&transition_masses(graph, None, u, p, q)))
                .collect();
            Tables::Precomputed { edge, first }
        } else {
            Tables::OnTheFly
        };
        Ok(Self { graph, params, tables })
    }

    pub fn params(&self) -> &WalkParams {
        &self.params
    }

    pub fn is_precomputed(&self) -> bool {
        matches!(self.tables, Tables::Precomputed { .. })
    }

    /// One transition from `cur`; `None` if `cur` has no outgoing mass.
    pub fn step<R: Rng + ?Sized>(&self, prev: Option<NodeId>, cur: NodeId, rng: &mut R) -> Option<NodeId> {
        let g = self.graph;
        let pick = |table: &AliasTable, rng: &mut R| g.neighbors(cur)[table.sample(rng)];
        match &self.tables {
            Tables::Precomputed { edge, first } => {
                let table = match prev {
                    None => first[cur as usize].as_ref(),
                    Some(t) => {
                        let pos = g.neighbors(t).binary_search(&cur).ok()?;
                        edge[g.edge_offset(t) + pos].as_ref()
                    }
                };
                table.map(|t| pick(t, rng))
            }
            Tables::OnTheFly => {
                let masses = transition_masses(g, prev, cur, self.params.p, self.params.q);
                AliasTable::new(&masses).map(|t| pick(&t, rng))
            }
        }
    }

    /// A walk starting at `start`; the flag is set when it ended early.
    pub fn walk_from<R: Rng + ?Sized>(&self, start: NodeId, rng: &mut R) -> (Vec<NodeId>, bool) {
        let length = self.params.walk_length;
        let mut walk = Vec::with_capacity(length);
        walk.push(start);
        let mut prev = None;
        let mut cur = start;
        while walk.len() < length {
            match self.step(prev, cur, rng) {
                Some(next) => {
                    walk.push(next);
                    prev = Some(cur);
                    cur = next;
                }
                None => return (walk, true),
            }
        }
        (walk, false)
    }

    /// Start node for each walk ordinal: rounds of `walks_per_node`, each a
    /// seed-shuffled permutation of all nodes.
    fn schedule(&self) -> Vec<NodeId> {
        let n = self.graph.node_count();
        let mut order = Vec::with_capacity(n * self.params.walks_per_node);
        for round in 0..self.params.walks_per_node {
            let mut perm: Vec<NodeId> = (0..n as NodeId).collect();
            let mut rng = rng::stream_rng(rng::derive_seed(self.params.seed, rng::tag_of("order")), round as u64);
            perm.shuffle(&mut rng);
            order.extend(perm);
        }
        order
    }

    fn walk_ordinal(&self, ordinal: usize, start: NodeId) -> (Vec<NodeId>, bool) {
        let mut rng = rng::stream_rng(self.params.seed, ordinal as u64);
        self.walk_from(start, &mut rng)
    }

    fn assemble(&self, results: Vec<(Vec<NodeId>, bool)>) -> WalkSet {
        let truncated = results.iter().filter(|(_, t)| *t).count();
        WalkSet {
            walks: results.into_iter().map(|(w, _)| w).collect(),
            source: String::new(),
            truncated,
        }
    }

    /// `walks_per_node` walks from every node, generated in parallel.
    pub fn walk_set(&self) -> WalkSet {
        let order = self.schedule();
        let results = order
            .par_iter()
            .enumerate()
            .map(|(i, &s)| self.walk_ordinal(i, s))
            .collect();
        self.assemble(results)
    }

    /// Single-threaded equivalent of [`Walker::walk_set`].
    pub fn walk_set_serial(&self) -> WalkSet {
        let order = self.schedule();
        let results = order
            .iter()
            .enumerate()
            .map(|(i, &s)| self.walk_ordinal(i, s))
            .collect();
        self.assemble(results)
    }
}

/// Walk from `start` with a caller-provided generator.
pub fn generate_walk<R: Rng + ?Sized>(
    graph: &Graph,
    start: usize,
    params: &WalkParams,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let start = graph.check_node(start)?;
    let walker = Walker::with_budget(graph, *params, 0)?;
    Ok(walker.walk_from(start, rng).0)
}

pub fn generate_walk_set(graph: &Graph, params: &WalkParams) -> Result<WalkSet> {
    Ok(Walker::new(graph, *params)?.walk_set())
}

/// Occurrences of every node across all walks.
pub fn walk_frequency_histogram(walks: &WalkSet) -> BTreeMap<NodeId, usize> {
    let mut hist = BTreeMap::new();
    for walk in &walks.walks {
        for &v in walk {
            *hist.entry(v).or_insert(0) += 1;
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, q: f64) -> WalkParams {
        WalkParams {
            p,
            q,
            ..WalkParams::default()
        }
    }

    #[test]
    fn uniform_when_unbiased() {
        let g = Graph::from_pairs(5, false, &[(0, 1), (0, 2), (0, 3), (1, 2)]);
        let d = transition_distribution(&g, Some(1), 0, &params(1.0, 1.0)).unwrap();
        for &pr in &d.probs {
            assert!((pr - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn path_return_and_outward_masses() {
        // a-b-c, prev=a, cur=b: masses 1/p = 0.5 and 1/q = 2
        let g = Graph::from_pairs(3, false, &[(0, 1), (1, 2)]);
        let d = transition_distribution(&g, Some(0), 1, &params(2.0, 0.5)).unwrap();
        assert!((d.prob_of(0) - 0.2).abs() < 1e-15);
        assert!((d.prob_of(2) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn triangle_with_tail() {
        // a,b,c triangle plus c-d; prev=a, cur=c
        let g = Graph::from_pairs(4, false, &[(0, 1), (1, 2), (2, 0), (2, 3)]);
        let d = transition_distribution(&g, Some(0), 2, &params(1.0, 1.0)).unwrap();
        for v in [0, 1, 3] {
            assert!((d.prob_of(v) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(d.prob_of(2), 0.0);
    }

    #[test]
    fn empty_distribution_and_bad_prev() {
        let g = Graph::from_pairs(3, false, &[(0, 1)]);
        assert!(matches!(
            transition_distribution(&g, None, 2, &params(1.0, 1.0)),
            Err(Error::EmptyDistribution(2))
        ));
        assert!(transition_distribution(&g, Some(2), 0, &params(1.0, 1.0)).is_err());
    }

    #[test]
    fn sample_next_degenerate_and_uniform() {
        let mut rng = rng::seeded(3);
        let single = TransitionDistribution {
            nodes: vec![7],
            probs: vec![1.0],
        };
        assert_eq!(sample_next(&single, &mut rng).unwrap(), 7);

        let uniform = TransitionDistribution {
            nodes: vec![0, 1, 2],
            probs: vec![1.0 / 3.0; 3],
        };
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[sample_next(&uniform, &mut rng).unwrap() as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
        }

        let seq = |seed| {
            let mut r = rng::seeded(seed);
            (0..50)
                .map(|_| sample_next(&uniform, &mut r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(11), seq(11));
    }

    #[test]
    fn walk_edge_cases() {
        let g = Graph::from_pairs(3, false, &[(0, 1)]);
        let mut rng = rng::seeded(0);
        assert_eq!(generate_walk(&g, 2, &params(1.0, 1.0), &mut rng).unwrap(), vec![2]);
        let short = WalkParams {
            walk_length: 4,
            ..WalkParams::default()
        };
        assert_eq!(generate_walk(&g, 0, &short, &mut rng).unwrap(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn directed_sink_truncates() {
        let g = Graph::from_pairs(3, true, &[(0, 1), (1, 2)]);
        let walker = Walker::new(&g, params(1.0, 1.0)).unwrap();
        let (walk, truncated) = walker.walk_from(0, &mut rng::seeded(0));
        assert_eq!(walk, vec![0, 1, 2]);
        assert!(truncated);
    }

    #[test]
    fn walk_set_shape_and_determinism() {
        let g = crate::synth::ring(10);
        let p = WalkParams {
            walk_length: 20,
            ..WalkParams::default()
        };
        let a = generate_walk_set(&g, &p).unwrap();
        assert_eq!(a.len(), 100);
        assert!(a.walks.iter().all(|w| w.len() == 20));
        let b = generate_walk_set(&g, &p).unwrap();
        assert_eq!(a, b);
        let serial = Walker::new(&g, p).unwrap().walk_set_serial();
        assert_eq!(a, serial);
        let lazy = Walker::with_budget(&g, p, 0).unwrap().walk_set();
        assert_eq!(a, lazy);

        let empty = Graph::from_pairs(0, false, &[]);
        assert!(generate_walk_set(&empty, &p).unwrap().is_empty());
    }

    #[test]
    fn histogram_counts() {
        let ws = WalkSet {
            walks: vec![vec![0, 1, 0]],
            ..WalkSet::default()
        };
        assert_eq!(walk_frequency_histogram(&ws), BTreeMap::from([(0, 2), (1, 1)]));
        assert!(walk_frequency_histogram(&WalkSet::default()).is_empty());
    }

    #[test]
    fn walk_file_round_trip() {
        let g = crate::synth::ring(6);
        let ws = generate_walk_set(
            &g,
            &WalkParams {
                walk_length: 5,
                walks_per_node: 2,
                ..WalkParams::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        ws.write(&g, &mut buf).unwrap();
        let back = WalkSet::read(buf.as_slice(), &g, "mem").unwrap();
        assert_eq!(back.walks, ws.walks);
    }

    proptest! {
        #[test]
        fn distributions_normalised_and_walks_follow_edges(
            edges in proptest::collection::vec((0u32..8, 0u32..8, 0.1f64..3.0), 1..25),
            p in 0.25f64..4.0,
            q in 0.25f64..4.0,
            seed in 0u64..1000,
        ) {
            let g = Graph::from_edges(8, false, &edges);
            let wp = WalkParams { p, q, walk_length: 12, walks_per_node: 1, seed };
            for cur in 0..8usize {
                for &t in g.neighbors(cur as NodeId) {
                    let d = transition_distribution(&g, Some(t as usize), cur, &wp).unwrap();
                    let total: f64 = d.probs.iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-12);
                    prop_assert_eq!(&d.nodes[..], g.neighbors(cur as NodeId));
                }
            }
            for walk in generate_walk_set(&g, &wp).unwrap().walks {
                for pair in walk.windows(2) {
                    prop_assert!(g.has_edge(pair[0], pair[1]));
                }
            }
        }
    }
}
