use std::collections::BTreeSet;

use ndarray::Array2;
use rand::seq::index;

use super::WatermarkVector;
use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WmPair {
    pub u: usize,
    pub v: usize,
    pub label: u8,
}

/// Node-representation trigger set.
///
/// All internal pairs of the trigger nodes `S` have their adjacency bit
/// flipped; each such pair is labelled 1 exactly when it is an edge of the
/// flipped graph.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRepWatermark {
    pub alpha: f64,
    pub seed: u64,
    pub vector: WatermarkVector,
    pub num_nodes: usize,
    /// Sorted trigger node ids.
    pub trigger_nodes: Vec<usize>,
    /// Every internal pair of `S` with `u < v`, sorted.
    pub pairs: Vec<WmPair>,
    /// Edge set of the flipped graph, `u < v`, sorted.
    pub wm_edges: Vec<(usize, usize)>,
    pub wm_features: Array2<f64>,
}

impl NodeRepWatermark {
    pub fn wm_adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.num_nodes, self.wm_edges.iter().copied())
    }

    /// Whether `(u, v)` joins two trigger nodes.
    pub fn is_internal(&self, u: usize, v: usize) -> bool {
        u != v && self.trigger_nodes.binary_search(&u).is_ok() && self.trigger_nodes.binary_search(&v).is_ok()
    }
}

/// `round_half_up(alpha · n)`.
pub fn trigger_count(alpha: f64, num_nodes: usize) -> usize {
    (alpha * num_nodes as f64 + 0.5).floor() as usize
}

/// Samples `S` uniformly, then flips its internal pairs.
pub fn gen_node_rep_wm(graph: &Graph, alpha: f64, seed: u64) -> Result<NodeRepWatermark> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("watermark rate {alpha} must lie in (0, 1)")));
    }
    let n = graph.num_nodes();
    let k = trigger_count(alpha, n);
    if k < 2 {
        return Err(Error::TooFewTriggerNodes(k));
    }
    let mut r = rng::stream(seed, "wm-nodes");
    let mut nodes = index::sample(&mut r, n, k).into_vec();
    nodes.sort_unstable();
    let vector = WatermarkVector::generate(graph.feature_dim(), seed)?;
    gen_node_rep_wm_with(graph, nodes, vector, alpha, seed)
}

/// Builds the trigger set for an explicit node subset and vector.
pub fn gen_node_rep_wm_with(
    graph: &Graph,
    mut trigger_nodes: Vec<usize>,
    vector: WatermarkVector,
    alpha: f64,
    seed: u64,
) -> Result<NodeRepWatermark> {
    let n = graph.num_nodes();
    trigger_nodes.sort_unstable();
    trigger_nodes.dedup();
    if trigger_nodes.len() < 2 {
        return Err(Error::TooFewTriggerNodes(trigger_nodes.len()));
    }
    if let Some(&id) = trigger_nodes.iter().find(|&&id| id >= n) {
        return Err(Error::NodeOutOfRange { id, num_nodes: n });
    }
    if vector.dim() != graph.feature_dim() {
        return Err(Error::ShapeMismatch(format!(
            "watermark vector has {} entries, features have {}",
            vector.dim(),
            graph.feature_dim()
        )));
    }

    let mut edges: BTreeSet<(usize, usize)> = graph.edges().clone();
    let mut pairs = Vec::new();
    for (i, &u) in trigger_nodes.iter().enumerate() {
        for &v in &trigger_nodes[i + 1..] {
            let was_edge = edges.remove(&(u, v));
            if !was_edge {
                edges.insert((u, v));
            }
            pairs.push(WmPair { u, v, label: u8::from(!was_edge) });
        }
    }

    let mut wm_features = graph.features().clone();
    let w = ndarray::ArrayView1::from(&vector.w);
    for &s in &trigger_nodes {
        wm_features.row_mut(s).assign(&w);
    }
    Ok(NodeRepWatermark {
        alpha,
        seed,
        vector,
        num_nodes: n,
        trigger_nodes,
        pairs,
        wm_edges: edges.into_iter().collect(),
        wm_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sbm, init_features};
    use proptest::prelude::*;

    fn graph_with_features(n: usize, edges: &[(usize, usize)], d: usize) -> Graph {
        init_features(Graph::new(n, edges.iter().copied()).unwrap(), d, 1).unwrap()
    }

    #[test]
    fn five_node_example() {
        let g = graph_with_features(5, &[(1, 2), (0, 1), (3, 4)], 3);
        let vector = WatermarkVector::generate(3, 9).unwrap();
        let wm = gen_node_rep_wm_with(&g, vec![3, 1, 2], vector.clone(), 0.6, 9).unwrap();
        assert_eq!(wm.trigger_nodes, vec![1, 2, 3]);
        assert_eq!(
            wm.pairs,
            vec![
                WmPair { u: 1, v: 2, label: 0 },
                WmPair { u: 1, v: 3, label: 1 },
                WmPair { u: 2, v: 3, label: 1 },
            ]
        );
        assert_eq!(wm.wm_edges, vec![(0, 1), (1, 3), (2, 3), (3, 4)]);
        for s in [1, 2, 3] {
            assert_eq!(wm.wm_features.row(s).to_vec(), vector.w);
        }
        for v in [0, 4] {
            assert_eq!(wm.wm_features.row(v), g.features().row(v));
        }
    }

    #[test]
    fn disconnected_triggers_all_positive() {
        let g = graph_with_features(6, &[(0, 5)], 2);
        let wm = gen_node_rep_wm_with(&g, vec![1, 2, 3, 4], WatermarkVector::generate(2, 0).unwrap(), 0.5, 0).unwrap();
        assert_eq!(wm.pairs.len(), 6);
        assert!(wm.pairs.iter().all(|p| p.label == 1));
    }

    #[test]
    fn trigger_size_rounds_half_up() {
        assert_eq!(trigger_count(0.1, 200), 20);
        assert_eq!(trigger_count(0.25, 10), 3);
        assert_eq!(trigger_count(0.1, 15), 2);
        let g = graph_with_features(10, &[], 2);
        assert!(matches!(gen_node_rep_wm(&g, 0.1, 0), Err(Error::TooFewTriggerNodes(1))));
        assert!(gen_node_rep_wm(&g, 1.0, 0).is_err());
    }

    #[test]
    fn seeded_generation_repeats() {
        let g = init_features(generate_sbm(2, 20, 0.3, 0.05, 1).unwrap(), 4, 2).unwrap();
        let a = gen_node_rep_wm(&g, 0.2, 5).unwrap();
        assert_eq!(a, gen_node_rep_wm(&g, 0.2, 5).unwrap());
        assert_ne!(a.trigger_nodes, gen_node_rep_wm(&g, 0.2, 6).unwrap().trigger_nodes);
        assert_eq!(a.trigger_nodes.len(), 8);
    }

    proptest! {
        #[test]
        fn flips_exactly_internal_pairs(seed in 0u64..1000, p in 0.05f64..0.6) {
            let g = init_features(generate_sbm(1, 12, p, 0.0, seed).unwrap(), 2, seed).unwrap();
            let wm = gen_node_rep_wm(&g, 0.4, seed).unwrap();
            let adj = wm.wm_adjacency();
            let k = wm.trigger_nodes.len();
            let mut flipped = 0;
            for u in 0..12 {
                for v in (u + 1)..12 {
                    let differs = adj.has_edge(u, v) != g.has_edge(u, v);
                    prop_assert_eq!(differs, wm.is_internal(u, v));
                    flipped += usize::from(differs);
                }
            }
            prop_assert_eq!(flipped, k * (k - 1) / 2);
            for pair in &wm.pairs {
                prop_assert_eq!(pair.label == 1, adj.has_edge(pair.u, pair.v));
            }
        }
    }
}
