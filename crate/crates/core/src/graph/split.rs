use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ordered, Adjacency, Graph};
use crate::error::{Error, Result};
use crate::rng;

/// Largest pair universe for which non-edges are enumerated instead of rejection-sampled.
const ENUMERATE_LIMIT: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub u: usize,
    pub v: usize,
    pub label: u8,
    pub split: Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split ratios {parts:?} must be non-negative and sum to 1"
            )));
        }
        Ok(())
    }

    /// `(train, valid, test)` counts; valid and test round to nearest, train takes the rest.
    pub fn counts(&self, total: usize) -> (usize, usize, usize) {
        let test = (((total as f64) * self.test).round() as usize).min(total);
        let valid = (((total as f64) * self.valid).round() as usize).min(total - test);
        (total - test - valid, valid, test)
    }
}

/// Labeled node pairs plus the message-passing graph (train positives only).
#[derive(Clone, Debug, PartialEq)]
pub struct LinkDataset {
    num_nodes: usize,
    mp_adjacency: Adjacency,
    features: Array2<f64>,
    pairs: Vec<LabeledPair>,
}

impl LinkDataset {
    pub fn new(mp_adjacency: Adjacency, features: Array2<f64>, pairs: Vec<LabeledPair>) -> Result<Self> {
        let num_nodes = mp_adjacency.num_nodes();
        if features.nrows() != num_nodes {
            return Err(Error::ShapeMismatch(format!(
                "feature rows {} != node count {num_nodes}",
                features.nrows()
            )));
        }
        for p in &pairs {
            for id in [p.u, p.v] {
                if id >= num_nodes {
                    return Err(Error::NodeOutOfRange { id, num_nodes });
                }
            }
            if p.label > 1 {
                return Err(Error::InvalidArgument(format!("label {} is not 0/1", p.label)));
            }
        }
        Ok(LinkDataset {
            num_nodes,
            mp_adjacency,
            features,
            pairs,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn mp_adjacency(&self) -> &Adjacency {
        &self.mp_adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn split(&self, split: Split) -> Vec<LabeledPair> {
        self.pairs.iter().copied().filter(|p| p.split == split).collect()
    }

    /// The message-passing graph with the dataset's features: what the model owner
    /// trains on and hands over for trigger generation.
    pub fn train_graph(&self) -> Result<Graph> {
        Graph::new(self.num_nodes, self.mp_adjacency.edges())?.with_features(self.features.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DatasetFile {
            num_nodes: self.num_nodes,
            features: self.features.outer_iter().map(|r| r.to_vec()).collect(),
            pairs: self.pairs.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Rebuilds the dataset; the message-passing graph is re-derived from train positives.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        let dim = file.features.first().map_or(0, Vec::len);
        if file.features.len() != file.num_nodes || file.features.iter().any(|r| r.len() != dim) {
            return Err(Error::format("dataset", "ragged or mis-sized feature matrix"));
        }
        let flat: Vec<f64> = file.features.into_iter().flatten().collect();
        let features = Array2::from_shape_vec((file.num_nodes, dim), flat)
            .map_err(|e| Error::format("dataset", e.to_string()))?;
        let mp = train_adjacency(file.num_nodes, &file.pairs);
        LinkDataset::new(mp, features, file.pairs)
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    num_nodes: usize,
    features: Vec<Vec<f64>>,
    pairs: Vec<LabeledPair>,
}

fn train_adjacency(num_nodes: usize, pairs: &[LabeledPair]) -> Adjacency {
    Adjacency::from_edges(
        num_nodes,
        pairs
            .iter()
            .filter(|p| p.split == Split::Train && p.label == 1)
            .map(|p| (p.u, p.v)),
    )
}

/// Partitions the edges by `ratios` and pairs each split with as many sampled non-edges.
pub fn split_links(graph: &Graph, ratios: SplitRatios, seed: u64) -> Result<LinkDataset> {
    ratios.validate()?;
    let n = graph.num_nodes();
    let total_edges = graph.num_edges();
    let universe = n * n.saturating_sub(1) / 2;
    let available = universe - total_edges;
    if available < total_edges || (total_edges > 0 && available == 0) {
        return Err(Error::NoNegativesAvailable {
            needed: total_edges,
            available,
        });
    }

    let mut rng = rng::stream(seed, "split");
    let mut positives: Vec<(usize, usize)> = graph.edges().iter().copied().collect();
    positives.shuffle(&mut rng);
    let negatives = sample_non_edges(graph, total_edges, universe, &mut rng);

    let (n_train, n_valid, _) = ratios.counts(total_edges);
    let assign = |i: usize| {
        if i < n_train {
            Split::Train
        } else if i < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        }
    };

    let mut pairs = Vec::with_capacity(2 * total_edges);
    for (i, &(u, v)) in positives.iter().enumerate() {
        pairs.push(LabeledPair { u, v, label: 1, split: assign(i) });
    }
    for (i, &(u, v)) in negatives.iter().enumerate() {
        pairs.push(LabeledPair { u, v, label: 0, split: assign(i) });
    }
    let mp = train_adjacency(n, &pairs);
    LinkDataset::new(mp, graph.features().clone(), pairs)
}

fn sample_non_edges(graph: &Graph, count: usize, universe: usize, rng: &mut rng::StreamRng) -> Vec<(usize, usize)> {
    let n = graph.num_nodes();
    if count == 0 {
        return Vec::new();
    }
    if universe <= ENUMERATE_LIMIT {
        let candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !graph.has_edge(u, v))
            .collect();
        return candidates.choose_multiple(rng, count).copied().collect();
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let p = ordered(u, v);
        if !graph.has_edge(p.0, p.1) && seen.insert(p) {
            out.push(p);
        }
    }
    out
}
