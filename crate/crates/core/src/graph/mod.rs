//! Undirected graphs, link datasets and k-hop subgraphs.

mod io;
mod khop;
mod sbm;
mod split;

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use io::{load_edge_list, load_features, parse_edge_list, parse_features, write_edge_list, write_features};
pub use khop::{extract_khop, Subgraph};
pub use sbm::generate_sbm;
pub use split::{split_links, LabeledPair, LinkDataset, Split, SplitRatios};

/// Normalizes an unordered pair to `(min, max)`.
#[inline]
pub fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Symmetric 0/1 adjacency stored as sorted neighbor lists (CSR).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjacency {
    num_nodes: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Adjacency {
    /// Builds an adjacency from unordered pairs. Duplicates collapse, self-loops are dropped.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            if u == v {
                continue;
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Adjacency {
            num_nodes,
            offsets,
            neighbors,
        }
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self::from_edges(num_nodes, std::iter::empty())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.num_nodes).all(|u| self.neighbors(u).iter().all(|&v| self.has_edge(v, u)))
    }
}

/// Undirected simple graph with a dense node-feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
    features: Array2<f64>,
}

impl Graph {
    /// Builds a graph with an empty (`n × 0`) feature matrix.
    pub fn new<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop on node {u}")));
            }
            for id in [u, v] {
                if id >= num_nodes {
                    return Err(Error::NodeOutOfRange { id, num_nodes });
                }
            }
            set.insert(ordered(u, v));
        }
        Ok(Graph {
            num_nodes,
            edges: set,
            features: Array2::zeros((num_nodes, 0)),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&ordered(u, v))
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.num_nodes {
            return Err(Error::ShapeMismatch(format!(
                "feature matrix has {} rows, graph has {} nodes",
                features.nrows(),
                self.num_nodes
            )));
        }
        self.features = features;
        Ok(self)
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.num_nodes, self.edges.iter().copied())
    }
}

/// Overwrites the features with i.i.d. Uniform(−1, 1) entries.
pub fn init_features(graph: Graph, dim: usize, seed: u64) -> Result<Graph> {
    if dim == 0 {
        return Err(Error::InvalidArgument("feature dimension must be >= 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let n = graph.num_nodes();
    let features = Array2::from_shape_fn((n, dim), |_| rng.random_range(-1.0..1.0));
    graph.with_features(features)
}
