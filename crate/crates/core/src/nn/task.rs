use std::sync::Arc;

use ndarray::Array2;

use super::loss::{one_hot, softmax};
use super::model::LinkPredictor;
use super::params::Params;
use super::sparse::GraphInput;
use crate::error::{Error, Result};
use crate::graph::{LabeledPair, LinkDataset, Subgraph};
use crate::stats;

#[derive(Clone, Debug)]
pub enum TaskInputs {
    /// Node pairs scored on one shared graph.
    Pairs {
        graph: Arc<GraphInput>,
        pairs: Vec<(usize, usize)>,
    },
    /// One input graph per sample.
    Subgraphs(Vec<GraphInput>),
}

/// A labelled batch for either link-prediction pathway.
///
/// `targets` are per-sample class distributions used by the loss; `labels`
/// are the hard 0/1 labels used for AUC.
#[derive(Clone, Debug)]
pub struct Task {
    pub inputs: TaskInputs,
    pub targets: Array2<f64>,
    pub labels: Vec<u8>,
}

impl Task {
    pub fn pairs(graph: Arc<GraphInput>, pairs: Vec<(usize, usize)>, labels: Vec<u8>) -> Self {
        assert_eq!(pairs.len(), labels.len());
        Task {
            targets: one_hot(&labels),
            inputs: TaskInputs::Pairs { graph, pairs },
            labels,
        }
    }

    pub fn subgraphs(inputs: Vec<GraphInput>, labels: Vec<u8>) -> Self {
        assert_eq!(inputs.len(), labels.len());
        Task {
            targets: one_hot(&labels),
            inputs: TaskInputs::Subgraphs(inputs),
            labels,
        }
    }

    pub fn from_labeled_pairs(graph: Arc<GraphInput>, pairs: &[LabeledPair]) -> Self {
        Task::pairs(
            graph,
            pairs.iter().map(|p| (p.u, p.v)).collect(),
            pairs.iter().map(|p| p.label).collect(),
        )
    }

    pub fn from_subgraphs(subgraphs: &[Subgraph]) -> Self {
        Task::subgraphs(
            subgraphs.iter().map(GraphInput::from_subgraph).collect(),
            subgraphs.iter().map(|s| s.label).collect(),
        )
    }

    /// Replaces the loss targets, keeping the AUC labels.
    pub fn with_targets(mut self, targets: Array2<f64>) -> Result<Self> {
        if targets.dim() != (self.len(), 2) {
            return Err(Error::ShapeMismatch(format!(
                "targets {:?} for {} samples",
                targets.dim(),
                self.len()
            )));
        }
        self.targets = targets;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn logits(&self, model: &LinkPredictor) -> Result<Array2<f64>> {
        match &self.inputs {
            TaskInputs::Pairs { graph, pairs } => model.pair_logits(graph, pairs),
            TaskInputs::Subgraphs(inputs) => model.subgraph_logits(inputs),
        }
    }

    pub fn loss_and_grad(&self, model: &LinkPredictor) -> Result<(f64, Params)> {
        match &self.inputs {
            TaskInputs::Pairs { graph, pairs } => model.pair_loss_grad(graph, pairs, self.targets.view()),
            TaskInputs::Subgraphs(inputs) => model.subgraph_loss_grad(inputs, self.targets.view()),
        }
    }

    /// Softmax class probabilities, one row per sample.
    pub fn probabilities(&self, model: &LinkPredictor) -> Result<Array2<f64>> {
        Ok(softmax(self.logits(model)?.view()))
    }

    /// Positive-class probabilities.
    pub fn scores(&self, model: &LinkPredictor) -> Result<Vec<f64>> {
        Ok(self.probabilities(model)?.column(1).to_vec())
    }

    pub fn auc(&self, model: &LinkPredictor) -> Result<f64> {
        stats::auc(&self.scores(model)?, &self.labels)
    }
}

/// How node features and structure reach the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Pathway {
    /// Whole-graph encoding, pairs scored from node embeddings.
    NodeRep,
    /// Classification of the `hops`-hop enclosing subgraph of each pair.
    Subgraph { hops: usize },
}

impl Pathway {
    /// Builds the task for `pairs`, scoring on the dataset's message-passing graph.
    pub fn task(&self, ds: &LinkDataset, graph: &Arc<GraphInput>, pairs: &[LabeledPair]) -> Result<Task> {
        match *self {
            Pathway::NodeRep => Ok(Task::from_labeled_pairs(Arc::clone(graph), pairs)),
            Pathway::Subgraph { hops } => {
                let subgraphs = pairs
                    .iter()
                    .map(|p| crate::graph::extract_khop(ds, p, hops))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Task::from_subgraphs(&subgraphs))
            }
        }
    }
}
