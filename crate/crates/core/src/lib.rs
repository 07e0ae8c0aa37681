//! Backdoor watermarking for GNN link predictors: trigger-set generation,
//! embedding, statistical ownership verification and an attack battery.

pub mod attacks;
pub mod embed;
pub mod error;
pub mod graph;
pub mod nn;
pub mod protocol;
pub mod rng;
pub mod stats;
pub mod wm;

pub use error::{Error, Result};
pub use graph::{Adjacency, Graph, LinkDataset, Split, SplitRatios, Subgraph};
pub use nn::{Adam, Arch, LinkPredictor, Pathway, Task};
pub use stats::{AucSamples, ThresholdReport};
pub use wm::{NodeRepWatermark, SubgraphWatermark, WatermarkSet, WatermarkVector, WmParams};
