//! Trigger-set construction for both link-prediction pathways.

mod codec;
mod node_rep;
mod subgraph;

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use sha2::{Digest, Sha256};

pub use codec::MAGIC;
pub use node_rep::{gen_node_rep_wm, gen_node_rep_wm_with, trigger_count, NodeRepWatermark, WmPair};
pub use subgraph::{gen_subgraph_wm, subgraph_count, SubgraphWatermark, WmSubgraph};

use crate::error::{Error, Result};
use crate::graph::{extract_khop, LinkDataset, Split};
use crate::nn::{GraphInput, Pathway, Task};
use crate::rng;

/// Secret feature row written into every trigger node.
#[derive(Clone, Debug, PartialEq)]
pub struct WatermarkVector {
    pub w: Vec<f64>,
    pub seed: u64,
}

impl WatermarkVector {
    /// Entries i.i.d. Uniform(−1, 1).
    pub fn generate(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("watermark vector needs dimension >= 1".into()));
        }
        let mut r = rng::stream(seed, "wm-vector");
        Ok(WatermarkVector {
            w: (0..dim).map(|_| r.random_range(-1.0..1.0)).collect(),
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// A trigger set of either pathway.
#[derive(Clone, Debug, PartialEq)]
pub enum WatermarkSet {
    NodeRep(NodeRepWatermark),
    Subgraph(SubgraphWatermark),
}

impl WatermarkSet {
    pub fn len(&self) -> usize {
        match self {
            WatermarkSet::NodeRep(wm) => wm.pairs.len(),
            WatermarkSet::Subgraph(wm) => wm.subgraphs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WatermarkSet::NodeRep(_) => "node_rep",
            WatermarkSet::Subgraph(_) => "subgraph",
        }
    }

    pub fn vector(&self) -> &WatermarkVector {
        match self {
            WatermarkSet::NodeRep(wm) => &wm.vector,
            WatermarkSet::Subgraph(wm) => &wm.vector,
        }
    }

    /// The labelled batch the embedding and verification steps consume.
    pub fn task(&self) -> Result<Task> {
        match self {
            WatermarkSet::NodeRep(wm) => Ok(wm.task()),
            WatermarkSet::Subgraph(wm) => wm.task(),
        }
    }

    /// Canonical encoding; equal watermarks give equal bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        codec::decode(bytes)
    }

    /// SHA-256 of the canonical bytes, lowercase hex.
    pub fn hash_hex(&self) -> String {
        hash_bytes(&self.to_bytes())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// What the judge needs to build a trigger set.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WmParams {
    #[serde(default = "node_rep")]
    pub pathway: Pathway,
    pub alpha: f64,
    pub seed: u64,
}

fn node_rep() -> Pathway {
    Pathway::NodeRep
}

/// Trigger set for the owner's dataset: node-rep triggers come from the
/// message-passing graph, subgraph triggers from the training-pair subgraphs.
pub fn generate(ds: &LinkDataset, params: &WmParams) -> Result<WatermarkSet> {
    match params.pathway {
        Pathway::NodeRep => Ok(WatermarkSet::NodeRep(gen_node_rep_wm(&ds.train_graph()?, params.alpha, params.seed)?)),
        Pathway::Subgraph { hops } => {
            let train = ds
                .split(Split::Train)
                .iter()
                .map(|p| extract_khop(ds, p, hops))
                .collect::<Result<Vec<_>>>()?;
            let vector = WatermarkVector::generate(ds.features().ncols(), params.seed)?;
            Ok(WatermarkSet::Subgraph(gen_subgraph_wm(&train, params.alpha, vector, params.seed)?))
        }
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl NodeRepWatermark {
    pub fn task(&self) -> Task {
        let input = GraphInput::new(&self.wm_adjacency(), self.wm_features.clone());
        Task::pairs(
            Arc::new(input),
            self.pairs.iter().map(|p| (p.u, p.v)).collect(),
            self.pairs.iter().map(|p| p.label).collect(),
        )
    }
}

impl SubgraphWatermark {
    pub fn task(&self) -> Result<Task> {
        let subgraphs = self
            .subgraphs
            .iter()
            .map(|s| s.materialize(&self.vector))
            .collect::<Result<Vec<_>>>()?;
        Ok(Task::from_subgraphs(&subgraphs))
    }
}
