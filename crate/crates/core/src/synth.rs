//! Synthetic graph generators for tests, examples and benchmarks.

use rand::Rng;

use crate::graph::{Graph, LabelTable, NodeId};
use crate::rng;

/// Cycle on `n` nodes.
pub fn ring(n: usize) -> Graph {
    let pairs: Vec<(NodeId, NodeId)> = (0..n).map(|i| (i as NodeId, ((i + 1) % n) as NodeId)).collect();
    Graph::from_pairs(n, false, &pairs)
}

/// `count` disjoint cliques of `size` nodes, labelled by clique.
pub fn disjoint_cliques(count: usize, size: usize) -> (Graph, LabelTable) {
    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    for c in 0..count {
        let base = c * size;
        for i in 0..size {
            labels.push(((base + i) as NodeId, c as u32));
            for j in i + 1..size {
                pairs.push(((base + i) as NodeId, (base + j) as NodeId));
            }
        }
    }
    let n = count * size;
    (
        Graph::from_pairs(n, false, &pairs),
        LabelTable::from_assignments(n, &labels),
    )
}

/// Preferential attachment: a clique on `attach + 1` seed nodes, then each
/// new node links to `attach` distinct existing nodes chosen with
/// probability proportional to degree.
pub fn barabasi_albert(n: usize, attach: usize, seed: u64) -> Graph {
    assert!(attach >= 1 && n > attach, "need n > attach >= 1");
    let mut rng = rng::seeded(seed);
    let mut pairs = Vec::with_capacity(n * attach);
    // every edge endpoint once; uniform draws from it are degree-proportional
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * n * attach);
    for i in 0..=attach {
        for j in i + 1..=attach {
            pairs.push((i as NodeId, j as NodeId));
            endpoints.push(i as NodeId);
            endpoints.push(j as NodeId);
        }
    }
    let mut chosen = Vec::with_capacity(attach);
    for v in attach + 1..n {
        chosen.clear();
        while chosen.len() < attach {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            pairs.push((v as NodeId, t));
            endpoints.push(v as NodeId);
            endpoints.push(t);
        }
    }
    Graph::from_pairs(n, false, &pairs)
}

/// Stochastic block model with blocks of the given sizes; nodes are
/// numbered block by block and labelled with their block index.
pub fn stochastic_block_model(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> (Graph, LabelTable) {
    let mut rng = rng::seeded(seed);
    let block: Vec<u32> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b as u32, s))
        .collect();
    let n = block.len();
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block[u] == block[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                pairs.push((u as NodeId, v as NodeId));
            }
        }
    }
    let labels: Vec<(NodeId, u32)> = block.iter().enumerate().map(|(v, &b)| (v as NodeId, b)).collect();
    (
        Graph::from_pairs(n, false, &pairs),
        LabelTable::from_assignments(n, &labels),
    )
}

/// Keeps each edge selected by `thin` with probability `keep`; other edges
/// are kept unconditionally. Node ids and labels are preserved.
pub fn thin_edges<F>(graph: &Graph, keep: f64, seed: u64, thin: F) -> Graph
where
    F: Fn(NodeId, NodeId) -> bool,
{
    let mut rng = rng::seeded(seed);
    let edges: Vec<(NodeId, NodeId, f64)> = graph
        .edges()
        .filter(|&(u, v, _)| !thin(u, v) || rng.random::<f64>() < keep)
        .collect();
    let mut builder = crate::graph::GraphBuilder::new(graph.is_directed());
    for label in graph.labels() {
        builder.add_node(label);
    }
    for (u, v, w) in edges {
        builder.add_edge(graph.label(u), graph.label(v), w);
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ba_edge_count_and_connectivity() {
        let g = barabasi_albert(500, 2, 1);
        assert_eq!(g.node_count(), 500);
        assert_eq!(g.edge_count(), 3 + 2 * (500 - 3));
        assert_eq!(g.components().1, 1);
        assert!((0..500).all(|v| g.degree(v).unwrap() >= 2));
    }

    #[test]
    fn sbm_prefers_internal_edges() {
        let (g, labels) = stochastic_block_model(&[50, 50], 0.2, 0.01, 4);
        let (mut inside, mut across) = (0, 0);
        for (u, v, _) in g.edges() {
            if labels.get(u) == labels.get(v) {
                inside += 1;
            } else {
                across += 1;
            }
        }
        assert!(inside > 5 * across);
        assert_eq!(labels.class_count(), 2);
    }

    #[test]
    fn cliques_shape() {
        let (g, labels) = disjoint_cliques(2, 4);
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.components().1, 2);
        assert_eq!(labels.get(5), Some(1));
    }

    #[test]
    fn thinning_preserves_ids() {
        let (g, labels) = stochastic_block_model(&[30, 30], 0.3, 0.05, 2);
        let t = thin_edges(&g, 0.0, 1, |u, v| labels.get(u) == labels.get(v));
        assert_eq!(t.node_count(), g.node_count());
        assert_eq!(t.labels(), g.labels());
        assert!(t.edges().all(|(u, v, _)| labels.get(u) != labels.get(v)));
    }
}
