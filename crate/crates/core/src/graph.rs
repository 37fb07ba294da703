//! Immutable CSR graph with an external-id dictionary, edge-list and label
//! file I/O, and the degree / distance queries used by both walk layers.
//!
//! Edge-list format (UTF-8 text):
//!
//! ```text
//! # comment, everything after `#` is ignored
//! src dst          # unit weight
//! src dst 0.25     # explicit non-negative weight
//! lonely           # single token declares an isolated node
//! ```
//!
//! Self-loops are dropped on ingest and duplicate `(src, dst)` entries are
//! collapsed by summing their weights. For undirected graphs `a b` and `b a`
//! name the same edge.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node identifier in `[0, node_count)`.
pub type NodeId = u32;

/// Default hop cap for bounded shortest-path queries.
pub const DEFAULT_DISTANCE_CAP: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    directed: bool,
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Vec<f64>,
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

/// Counters collected while ingesting an edge list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: usize,
    pub edges_read: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
    pub components: usize,
    pub largest_component: usize,
    pub isolated_nodes: usize,
}

/// Incremental builder keyed by external string ids.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    directed: bool,
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<(NodeId, NodeId, f64)>,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new(directed: bool) -> Self {
        Self {
            directed,
            labels: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            self_loops: 0,
        }
    }

    /// Returns the dense id for `label`, registering it if new.
    pub fn add_node(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as NodeId;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    /// Adds an edge; self-loops register their node but are otherwise dropped.
    pub fn add_edge(&mut self, src: &str, dst: &str, weight: f64) {
        let u = self.add_node(src);
        let v = self.add_node(dst);
        self.add_edge_ids(u, v, weight);
    }

    fn add_edge_ids(&mut self, u: NodeId, v: NodeId, weight: f64) {
        if u == v {
            self.self_loops += 1;
            return;
        }
        let (a, b) = if self.directed || u < v { (u, v) } else { (v, u) };
        self.edges.push((a, b, weight));
    }

    pub fn build(self) -> Graph {
        self.build_with_report().0
    }

    pub fn build_with_report(mut self) -> (Graph, IngestReport) {
        let edges_read = self.edges.len() + self.self_loops;
        self.edges.sort_by_key(|&(a, b, _)| (a, b));
        let mut merged: Vec<(NodeId, NodeId, f64)> = Vec::with_capacity(self.edges.len());
        let mut collapsed = 0;
        for (a, b, w) in self.edges {
            match merged.last_mut() {
                Some(last) if last.0 == a && last.1 == b => {
                    last.2 += w;
                    collapsed += 1;
                }
                _ => merged.push((a, b, w)),
            }
        }
        let graph = Graph::assemble(self.directed, self.labels, self.index, &merged);
        let (comp, count) = graph.components();
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        let report = IngestReport {
            lines: 0,
            edges_read,
            self_loops_dropped: self.self_loops,
            duplicates_collapsed: collapsed,
            components: count,
            largest_component: sizes.iter().copied().max().unwrap_or(0),
            isolated_nodes: graph.isolation_mask().iter().filter(|&&iso| iso).count(),
        };
        (graph, report)
    }
}

impl Graph {
    /// Builds a graph over nodes `0..node_count` labelled by their decimal index.
    pub fn from_edges(node_count: usize, directed: bool, edges: &[(NodeId, NodeId, f64)]) -> Self {
        let mut builder = GraphBuilder::new(directed);
        for v in 0..node_count {
            builder.add_node(&v.to_string());
        }
        for &(u, v, w) in edges {
            assert!((u as usize) < node_count && (v as usize) < node_count);
            builder.add_edge_ids(u, v, w);
        }
        builder.build()
    }

    /// Unweighted convenience form of [`Graph::from_edges`].
    pub fn from_pairs(node_count: usize, directed: bool, pairs: &[(NodeId, NodeId)]) -> Self {
        let edges: Vec<_> = pairs.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_edges(node_count, directed, &edges)
    }

    fn assemble(
        directed: bool,
        labels: Vec<String>,
        index: HashMap<String, NodeId>,
        edges: &[(NodeId, NodeId, f64)],
    ) -> Self {
        let n = labels.len();
        let mut lists: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            lists[a as usize].push((b, w));
            if !directed {
                lists[b as usize].push((a, w));
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(edges.len() * 2);
        let mut weights = Vec::with_capacity(edges.len() * 2);
        offsets.push(0);
        for mut list in lists {
            list.sort_by_key(|&(t, _)| t);
            for (t, w) in list {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Self {
            directed,
            offsets,
            targets,
            weights,
            labels,
            index,
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of edges; each undirected edge counts once.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.targets.len()
        } else {
            self.targets.len() / 2
        }
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn check_node(&self, v: usize) -> Result<NodeId> {
        if v < self.node_count() {
            Ok(v as NodeId)
        } else {
            Err(Error::InvalidNode {
                id: v,
                node_count: self.node_count(),
            })
        }
    }

    /// Sorted neighbor ids of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edge weights aligned with [`Graph::neighbors`].
    pub fn neighbor_weights(&self, v: NodeId) -> &[f64] {
        let v = v as usize;
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    /// CSR position of the first entry of `v`'s adjacency list.
    pub(crate) fn edge_offset(&self, v: NodeId) -> usize {
        self.offsets[v as usize]
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Number of distinct neighbors (out-neighbors for directed graphs).
    pub fn degree(&self, v: usize) -> Result<usize> {
        let v = self.check_node(v)?;
        Ok(self.out_degree(v))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.neighbors(u)
            .binary_search(&v)
            .ok()
            .map(|i| self.neighbor_weights(u)[i])
    }

    /// All edges as `(src, dst, weight)`; undirected edges appear once with `src < dst`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.node_count() as NodeId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.neighbor_weights(u))
                .filter(move |(&v, _)| self.directed || u < v)
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id_of(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn require_id(&self, label: &str) -> Result<NodeId> {
        self.id_of(label).ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    /// `true` for nodes with no incident edge in either direction.
    fn isolation_mask(&self) -> Vec<bool> {
        let mut mask: Vec<bool> = (0..self.node_count() as NodeId)
            .map(|v| self.out_degree(v) == 0)
            .collect();
        for &t in &self.targets {
            mask[t as usize] = false;
        }
        mask
    }

    /// Copy with identical topology and ids, each weight replaced by `f(src, dst, old)`.
    ///
    /// For undirected graphs `f` is evaluated once per edge (with `src < dst`)
    /// and the result is stored in both directions.
    pub fn with_weights<F>(&self, mut f: F) -> Graph
    where
        F: FnMut(NodeId, NodeId, f64) -> f64,
    {
        let mut weights = self.weights.clone();
        let mut assigned: HashMap<(NodeId, NodeId), f64> = HashMap::new();
        for u in 0..self.node_count() as NodeId {
            let start = self.offsets[u as usize];
            for (i, &v) in self.neighbors(u).iter().enumerate() {
                let old = self.weights[start + i];
                weights[start + i] = if self.directed {
                    f(u, v, old)
                } else {
                    let key = (u.min(v), u.max(v));
                    match assigned.get(&key) {
                        Some(&w) => w,
                        None => {
                            let w = f(key.0, key.1, old);
                            assigned.insert(key, w);
                            w
                        }
                    }
                };
            }
        }
        Graph {
            weights,
            ..self.clone()
        }
    }

    /// Weakly connected component id per node, plus the component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.node_count();
        let mut undirected: Option<Vec<Vec<NodeId>>> = None;
        if self.directed {
            let mut adj = vec![Vec::new(); n];
            for (u, v, _) in self.edges() {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
            undirected = Some(adj);
        }
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            queue.push_back(s as NodeId);
            while let Some(u) = queue.pop_front() {
                let next: &[NodeId] = match &undirected {
                    Some(adj) => &adj[u as usize],
                    None => self.neighbors(u),
                };
                for &v in next {
                    if comp[v as usize] == usize::MAX {
                        comp[v as usize] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    /// Unweighted hop distance from `src` to `dst`, `None` when unreachable
    /// within `cap` hops.
    pub fn bfs_distance(&self, src: usize, dst: usize, cap: u32) -> Result<Option<u32>> {
        let src = self.check_node(src)?;
        let dst = self.check_node(dst)?;
        if cap == 0 {
            return Err(Error::InvalidArgument("distance cap must be >= 1".into()));
        }
        let mut scratch = BfsScratch::new(self.node_count());
        scratch.run(self, src, cap);
        Ok(scratch.distance(dst))
    }

    /// Number of nodes per degree value.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for v in 0..self.node_count() as NodeId {
            *hist.entry(self.out_degree(v)).or_insert(0) += 1;
        }
        hist
    }

    pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<(Graph, IngestReport)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_edge_list(BufReader::new(file), directed, &path.display().to_string())
    }

    pub fn read_edge_list<R: BufRead>(reader: R, directed: bool, origin: &str) -> Result<(Graph, IngestReport)> {
        let mut builder = GraphBuilder::new(directed);
        let mut lines = 0;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            lines += 1;
            let content = line.split('#').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                [node] => {
                    builder.add_node(node);
                }
                [src, dst] => builder.add_edge(src, dst, 1.0),
                [src, dst, w] => {
                    let weight: f64 = w
                        .parse()
                        .map_err(|_| Error::parse(origin, lineno, format!("bad weight `{w}`")))?;
                    if weight.is_nan() || weight.is_infinite() {
                        return Err(Error::parse(origin, lineno, format!("non-finite weight `{w}`")));
                    }
                    if weight < 0.0 {
                        return Err(Error::NegativeWeight {
                            origin: origin.to_string(),
                            line: lineno,
                            weight,
                        });
                    }
                    builder.add_edge(src, dst, weight);
                }
                _ => {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        format!("expected `src dst [weight]`, got {} fields", fields.len()),
                    ))
                }
            }
        }
        let (graph, mut report) = builder.build_with_report();
        report.lines = lines;
        Ok((graph, report))
    }

    /// Writes the graph in edge-list format. Isolated nodes are emitted as
    /// single-token lines so that a reload preserves the node count.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# {} nodes {} edges {}",
            self.node_count(),
            self.edge_count(),
            if self.directed { "directed" } else { "undirected" }
        )?;
        for (v, isolated) in self.isolation_mask().into_iter().enumerate() {
            if isolated {
                writeln!(out, "{}", self.labels[v])?;
            }
        }
        for (u, v, w) in self.edges() {
            writeln!(out, "{} {} {}", self.label(u), self.label(v), w)?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_edge_list(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Reusable bounded-BFS state; resetting costs only the visited set.
#[derive(Debug, Clone)]
pub struct BfsScratch {
    dist: Vec<u32>,
    touched: Vec<NodeId>,
    queue: VecDeque<NodeId>,
}

impl BfsScratch {
    pub fn new(node_count: usize) -> Self {
        Self {
            dist: vec![u32::MAX; node_count],
            touched: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    /// Runs BFS from `src`, labelling every node within `cap` hops.
    pub fn run(&mut self, graph: &Graph, src: NodeId, cap: u32) {
        for &v in &self.touched {
            self.dist[v as usize] = u32::MAX;
        }
        self.touched.clear();
        self.queue.clear();
        self.dist[src as usize] = 0;
        self.touched.push(src);
        self.queue.push_back(src);
        while let Some(u) = self.queue.pop_front() {
            let du = self.dist[u as usize];
            if du == cap {
                continue;
            }
            for &v in graph.neighbors(u) {
                if self.dist[v as usize] == u32::MAX {
                    self.dist[v as usize] = du + 1;
                    self.touched.push(v);
                    self.queue.push_back(v);
                }
            }
        }
    }

    pub fn distance(&self, v: NodeId) -> Option<u32> {
        match self.dist[v as usize] {
            u32::MAX => None,
            d => Some(d),
        }
    }
}

/// Class assignment for a subset of graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    assignments: Vec<Option<u32>>,
    class_names: Vec<String>,
}

impl LabelTable {
    /// Builds a table from `(node, class)` pairs over `node_count` nodes.
    pub fn from_assignments(node_count: usize, pairs: &[(NodeId, u32)]) -> Self {
        let class_count = pairs.iter().map(|&(_, c)| c as usize + 1).max().unwrap_or(0);
        let mut assignments = vec![None; node_count];
        for &(v, c) in pairs {
            assignments[v as usize] = Some(c);
        }
        Self {
            assignments,
            class_names: (0..class_count).map(|c| c.to_string()).collect(),
        }
    }

    /// Reads `node_id class_id` lines. Class tokens are mapped to dense ids in
    /// numeric order when all are integers, otherwise lexicographic order.
    pub fn load(path: impl AsRef<Path>, graph: &Graph) -> Result<LabelTable> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), graph, &path.display().to_string())
    }

    pub fn read<R: BufRead>(reader: R, graph: &Graph, origin: &str) -> Result<LabelTable> {
        let mut raw: Vec<(NodeId, String, usize)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            let content = line.split('#').next().unwrap_or("");
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                [node, class] => {
                    let id = graph.require_id(node)?;
                    raw.push((id, class.to_string(), lineno));
                }
                _ => {
                    return Err(Error::parse(origin, lineno, "expected `node_id class_id`"));
                }
            }
        }
        if raw.is_empty() {
            return Err(Error::EmptyLabels(origin.to_string()));
        }
        let mut names: Vec<String> = raw.iter().map(|(_, c, _)| c.clone()).collect();
        names.sort();
        names.dedup();
        if names.iter().all(|c| c.parse::<u64>().is_ok()) {
            names.sort_by_key(|c| c.parse::<u64>().unwrap_or(0));
        }
        let class_index: HashMap<&str, u32> = names.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
        let mut assignments = vec![None; graph.node_count()];
        for (id, class, lineno) in &raw {
            let c = class_index[class.as_str()];
            match assignments[*id as usize] {
                Some(prev) if prev != c => {
                    return Err(Error::parse(
                        origin,
                        *lineno,
                        format!("conflicting labels for node `{}`", graph.label(*id)),
                    ))
                }
                _ => assignments[*id as usize] = Some(c),
            }
        }
        Ok(LabelTable {
            assignments,
            class_names: names,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_name(&self, class: u32) -> &str {
        &self.class_names[class as usize]
    }

    pub fn get(&self, v: NodeId) -> Option<u32> {
        self.assignments.get(v as usize).copied().flatten()
    }

    /// Labelled nodes in ascending id order.
    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(v, c)| c.map(|_| v as NodeId))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignments.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
