//! Coarsening of the source network into super-nodes and degree-based
//! mapping of target nodes onto them.
//!
//! Dump format, one super-node per line followed by one line per super-edge:
//!
//! ```text
//! 0: a,b,c
//! 1: d,e
//! 0 1 3
//! ```
//!
//! Members are external node ids; the edge line carries the number of source
//! edges crossing between the two member sets.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng;

/// Sweep limit for label propagation.
pub const MAX_SWEEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CoarsenMethod {
    #[default]
    LabelPropagation,
    DegreeBins,
}

/// How the degree of a super-node is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SuperDegree {
    /// Number of distinct adjacent super-nodes.
    #[default]
    Adjacent,
    /// Total number of source edges leaving the super-node.
    BoundaryEdges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MapMode {
    /// Only super-nodes whose degree equals the target node's degree.
    Exact,
    /// Super-nodes minimising the degree difference; never empty.
    #[default]
    Nearest,
}

/// Default cap on super-node size: `ceil(|V_source| / |V_target|)`.
pub fn default_max_super_size(source_nodes: usize, target_nodes: usize) -> usize {
    source_nodes.div_ceil(target_nodes.max(1)).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperGraph {
    members: Vec<Vec<NodeId>>,
    membership: Vec<u32>,
    /// `(a, b) -> crossing edge count` with `a < b`.
    edges: BTreeMap<(u32, u32), usize>,
    adjacency: Vec<Vec<(u32, usize)>>,
}

impl SuperGraph {
    /// Builds a super-graph from a partition given as one group id per node.
    /// Super-node ids follow the smallest member id of each group.
    pub fn from_partition(source: &Graph, group: &[usize]) -> Self {
        assert_eq!(group.len(), source.node_count());
        let mut by_group: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for (v, &g) in group.iter().enumerate() {
            by_group.entry(g).or_default().push(v as NodeId);
        }
        let mut members: Vec<Vec<NodeId>> = by_group.into_values().collect();
        members.sort_by_key(|m| m[0]);
        let mut membership = vec![0u32; source.node_count()];
        for (s, m) in members.iter().enumerate() {
            for &v in m {
                membership[v as usize] = s as u32;
            }
        }
        let mut edges = BTreeMap::new();
        for (u, v, _) in source.edges() {
            let (a, b) = (membership[u as usize], membership[v as usize]);
            if a != b {
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        Self::assemble(members, membership, edges)
    }

    fn assemble(members: Vec<Vec<NodeId>>, membership: Vec<u32>, edges: BTreeMap<(u32, u32), usize>) -> Self {
        let mut adjacency = vec![Vec::new(); members.len()];
        for (&(a, b), &c) in &edges {
            adjacency[a as usize].push((b, c));
            adjacency[b as usize].push((a, c));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            members,
            membership,
            edges,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn check(&self, s: usize) -> Result<()> {
        if s < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidSuperNode {
                id: s,
                count: self.len(),
            })
        }
    }

    /// Sorted source nodes of super-node `s`.
    pub fn members(&self, s: u32) -> &[NodeId] {
        &self.members[s as usize]
    }

    pub fn super_node_of(&self, v: NodeId) -> u32 {
        self.membership[v as usize]
    }

    pub fn membership(&self) -> &[u32] {
        &self.membership
    }

    /// Super-edges as `((a, b), crossing_count)` with `a < b`.
    pub fn super_edges(&self) -> impl Iterator<Item = ((u32, u32), usize)> + '_ {
        self.edges.iter().map(|(&k, &c)| (k, c))
    }

    pub fn super_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, s: u32) -> &[(u32, usize)] {
        &self.adjacency[s as usize]
    }

    pub fn super_degree(&self, s: usize, mode: SuperDegree) -> Result<usize> {
        self.check(s)?;
        Ok(self.degree_unchecked(s as u32, mode))
    }

    fn degree_unchecked(&self, s: u32, mode: SuperDegree) -> usize {
        let adj = &self.adjacency[s as usize];
        match mode {
            SuperDegree::Adjacent => adj.len(),
            SuperDegree::BoundaryEdges => adj.iter().map(|&(_, c)| c).sum(),
        }
    }

    pub fn write<W: Write>(&self, source: &Graph, mut out: W) -> std::io::Result<()> {
        for (s, m) in self.members.iter().enumerate() {
            let names: Vec<&str> = m.iter().map(|&v| source.label(v)).collect();
            if names.iter().any(|n| n.contains(',')) {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    "node ids containing ',' cannot be written to a super-graph dump",
                ));
            }
            writeln!(out, "{}: {}", s, names.join(","))?;
        }
        for (&(a, b), &c) in &self.edges {
            writeln!(out, "{a} {b} {c}")?;
        }
        Ok(())
    }

    pub fn save(&self, source: &Graph, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write(source, &mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Parses a dump against the source graph it was built from. Super-edge
    /// lines are checked against the recomputed crossing counts.
    pub fn read<R: BufRead>(reader: R, source: &Graph, origin: &str) -> Result<SuperGraph> {
        let mut group = vec![usize::MAX; source.node_count()];
        let mut listed_edges = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((id, rest)) = line.split_once(':') {
                let id: usize = id
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(origin, lineno, "bad super-node id"))?;
                for name in rest.trim().split(',').filter(|s| !s.is_empty()) {
                    let v = source.require_id(name)?;
                    if group[v as usize] != usize::MAX {
                        return Err(Error::parse(origin, lineno, format!("node `{name}` listed twice")));
                    }
                    group[v as usize] = id;
                }
            } else {
                let f: Vec<usize> = line
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(origin, lineno, "bad super-edge line"))?;
                if f.len() != 3 {
                    return Err(Error::parse(origin, lineno, "expected `idA idB count`"));
                }
                listed_edges.insert((f[0].min(f[1]) as u32, f[0].max(f[1]) as u32), f[2]);
            }
        }
        if let Some(v) = group.iter().position(|&g| g == usize::MAX) {
            return Err(Error::parse(
                origin,
                0,
                format!("node `{}` not assigned", source.label(v as NodeId)),
            ));
        }
        let sg = SuperGraph::from_partition(source, &group);
        if sg.edges != listed_edges {
            return Err(Error::parse(origin, 0, "super-edges disagree with the source graph"));
        }
        Ok(sg)
    }

    pub fn load(path: impl AsRef<Path>, source: &Graph) -> Result<SuperGraph> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), source, &path.display().to_string())
    }
}

/// Neighbor lists ignoring direction.
fn undirected_adjacency(graph: &Graph) -> Vec<Vec<(NodeId, f64)>> {
    let mut adj: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); graph.node_count()];
    for (u, v, w) in graph.edges() {
        adj[u as usize].push((v, w));
        adj[v as usize].push((u, w));
    }
    for list in &mut adj {
        list.sort_by_key(|&(t, _)| t);
    }
    adj
}

/// Synchronous label propagation over closed neighborhoods. Each node takes
/// the label with the largest total weight among itself (weight 1) and its
/// neighbors, ties going to the lowest label. Initial labels are a
/// seed-derived permutation of node ids.
pub fn label_propagation(graph: &Graph, seed: u64) -> (Vec<usize>, usize) {
    let n = graph.node_count();
    let adj = undirected_adjacency(graph);
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(&mut rng::seeded(rng::derive_seed(
        seed,
        rng::tag_of("label-propagation"),
    )));
    let mut tally: Vec<(usize, f64)> = Vec::new();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let next: Vec<usize> = (0..n)
            .map(|v| {
                tally.clear();
                tally.push((labels[v], 1.0));
                tally.extend(adj[v].iter().map(|&(u, w)| (labels[u as usize], w)));
                tally.sort_by_key(|&(l, _)| l);
                let mut best = (labels[v], f64::NEG_INFINITY);
                let mut i = 0;
                while i < tally.len() {
                    let label = tally[i].0;
                    let mut total = 0.0;
                    while i < tally.len() && tally[i].0 == label {
                        total += tally[i].1;
                        i += 1;
                    }
                    if total > best.1 {
                        best = (label, total);
                    }
                }
                best.0
            })
            .collect();
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
    }
    (labels, sweeps)
}

/// Splits each group larger than `max_size` into chunks of consecutive
/// nodes in BFS order over the group's induced subgraph.
fn split_groups(graph: &Graph, group: &[usize], max_size: usize) -> Vec<usize> {
    let adj = undirected_adjacency(graph);
    let mut by_group: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (v, &g) in group.iter().enumerate() {
        by_group.entry(g).or_default().push(v as NodeId);
    }
    let mut out = vec![0usize; group.len()];
    let mut next_id = 0;
    let mut visited = vec![false; group.len()];
    for (g, members) in by_group {
        if members.len() <= max_size {
            for &v in &members {
                out[v as usize] = next_id;
            }
            next_id += 1;
            continue;
        }
        let mut order = Vec::with_capacity(members.len());
        let mut queue = VecDeque::new();
        for &s in &members {
            if visited[s as usize] {
                continue;
            }
            visited[s as usize] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                order.push(u);
                for &(x, _) in &adj[u as usize] {
                    if group[x as usize] == g && !visited[x as usize] {
                        visited[x as usize] = true;
                        queue.push_back(x);
                    }
                }
            }
        }
        for chunk in order.chunks(max_size) {
            for &v in chunk {
                out[v as usize] = next_id;
            }
            next_id += 1;
        }
    }
    out
}

fn degree_bins(graph: &Graph) -> Vec<usize> {
    let (comp, _) = graph.components();
    let mut keys: HashMap<(usize, u32), usize> = HashMap::new();
    (0..graph.node_count())
        .map(|v| {
            let d = graph.out_degree(v as NodeId);
            let bin = if d == 0 { 0 } else { d.ilog2() + 1 };
            let len = keys.len();
            *keys.entry((comp[v], bin)).or_insert(len)
        })
        .collect()
}

/// Partitions `source` into super-nodes of at most `max_super_size` members.
pub fn coarsen(source: &Graph, method: CoarsenMethod, max_super_size: usize, seed: u64) -> Result<SuperGraph> {
    if source.is_empty() {
        return Err(Error::InvalidArgument("cannot coarsen an empty graph".into()));
    }
    if max_super_size == 0 {
        return Err(Error::InvalidArgument("max_super_size must be >= 1".into()));
    }
    let group = match method {
        CoarsenMethod::LabelPropagation => {
            let (labels, sweeps) = label_propagation(source, seed);
            log::debug!("label propagation finished after {sweeps} sweeps");
            labels
        }
        CoarsenMethod::DegreeBins => degree_bins(source),
    };
    let group = split_groups(source, &group, max_super_size);
    Ok(SuperGraph::from_partition(source, &group))
}

/// Target node -> candidate super-nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMapping {
    pub lists: Vec<Vec<u32>>,
    pub mode: MapMode,
}

impl NodeMapping {
    pub fn get(&self, v: NodeId) -> &[u32] {
        &self.lists[v as usize]
    }

    /// Number of target nodes mapped to at least one super-node.
    pub fn covered(&self) -> usize {
        self.lists.iter().filter(|l| !l.is_empty()).count()
    }
}

/// Super-nodes indexed by their degree.
pub struct DegreeIndex {
    by_degree: BTreeMap<usize, Vec<u32>>,
}

impl DegreeIndex {
    pub fn new(sg: &SuperGraph, degree: SuperDegree) -> Self {
        let mut by_degree: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for s in 0..sg.len() as u32 {
            by_degree.entry(sg.degree_unchecked(s, degree)).or_default().push(s);
        }
        Self { by_degree }
    }

    pub fn lookup(&self, degree: usize, mode: MapMode) -> Vec<u32> {
        match mode {
            MapMode::Exact => self.by_degree.get(&degree).cloned().unwrap_or_default(),
            MapMode::Nearest => {
                let below = self.by_degree.range(..=degree).next_back();
                let above = self.by_degree.range(degree..).next();
                match (below, above) {
                    (Some((&b, lo)), Some((&a, hi))) => {
                        let (db, da) = (degree - b, a - degree);
                        if db < da || a == b {
                            lo.clone()
                        } else if da < db {
                            hi.clone()
                        } else {
                            let mut both = lo.clone();
                            both.extend(hi);
                            both.sort_unstable();
                            both
                        }
                    }
                    (Some((_, only)), None) | (None, Some((_, only))) => only.clone(),
                    (None, None) => Vec::new(),
                }
            }
        }
    }
}

/// Super-nodes matched to target node `v` by degree.
pub fn node_map(target: &Graph, v: usize, sg: &SuperGraph, mode: MapMode, degree: SuperDegree) -> Result<Vec<u32>> {
    let v = target.check_node(v)?;
    if sg.is_empty() {
        return Err(Error::EmptySuperGraph);
    }
    Ok(DegreeIndex::new(sg, degree).lookup(target.out_degree(v), mode))
}

/// [`node_map`] for every target node.
pub fn map_all(target: &Graph, sg: &SuperGraph, mode: MapMode, degree: SuperDegree) -> Result<NodeMapping> {
    if sg.is_empty() {
        return Err(Error::EmptySuperGraph);
    }
    let index = DegreeIndex::new(sg, degree);
    let mut cache: HashMap<usize, Vec<u32>> = HashMap::new();
    let lists = (0..target.node_count() as NodeId)
        .map(|v| {
            let d = target.out_degree(v);
            cache.entry(d).or_insert_with(|| index.lookup(d, mode)).clone()
        })
        .collect();
    Ok(NodeMapping { lists, mode })
}
