//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use lpwm_core::graph::{generate_sbm, init_features, split_links};
use lpwm_core::nn::GraphInput;
use lpwm_core::wm::gen_node_rep_wm;
use lpwm_core::{Arch, LinkDataset, LinkPredictor, Split, SplitRatios, Task, WatermarkSet};

pub struct Fixture {
    pub ds: LinkDataset,
    pub input: Arc<GraphInput>,
    pub train: Task,
    pub wm: WatermarkSet,
    pub model: LinkPredictor,
}

/// Two-block SBM of `2 · per_block` nodes with `dim` random features and an
/// untrained GCN of width `hidden`.
pub fn fixture(per_block: usize, dim: usize, hidden: usize) -> Fixture {
    let g = init_features(generate_sbm(2, per_block, 0.25, 0.02, 1).unwrap(), dim, 2).unwrap();
    let ds = split_links(&g, SplitRatios::default(), 3).unwrap();
    let input = Arc::new(GraphInput::new(ds.mp_adjacency(), ds.features().clone()));
    let train = Task::from_labeled_pairs(Arc::clone(&input), &ds.split(Split::Train));
    let wm = WatermarkSet::NodeRep(gen_node_rep_wm(&ds.train_graph().unwrap(), 0.1, 4).unwrap());
    let model = LinkPredictor::new(Arch::Gcn, dim, hidden, &mut lpwm_core::rng::stream(5, "init"));
    Fixture { ds, input, train, wm, model }
}

/// Deterministic pseudo-random scores with alternating labels.
pub fn scores(n: usize) -> (Vec<f64>, Vec<u8>) {
    let s = (0..n).map(|i| ((i as f64) * 0.618_033_988_75).fract()).collect();
    let l = (0..n).map(|i| (i % 2) as u8).collect();
    (s, l)
}
