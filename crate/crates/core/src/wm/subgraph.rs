use ndarray::Array2;
use rand::seq::index;

use super::WatermarkVector;
use crate::error::{Error, Result};
use crate::graph::{ordered, Subgraph};
use crate::rng;

/// One trigger subgraph: original structure, inverted label. Its feature
/// rows are all the watermark vector, so they are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct WmSubgraph {
    /// Position in the training subgraph list it was drawn from.
    pub source_index: usize,
    pub node_ids: Vec<usize>,
    pub local_edges: Vec<(usize, usize)>,
    pub anchor: (usize, usize),
    pub original_label: u8,
    pub label: u8,
}

impl WmSubgraph {
    pub fn materialize(&self, vector: &WatermarkVector) -> Result<Subgraph> {
        let n = self.node_ids.len();
        let features = Array2::from_shape_fn((n, vector.dim()), |(_, j)| vector.w[j]);
        let sg = Subgraph {
            node_ids: self.node_ids.clone(),
            local_edges: self.local_edges.clone(),
            local_features: features,
            anchor: self.anchor,
            label: self.label,
        };
        sg.validate()?;
        Ok(sg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgraphWatermark {
    pub alpha: f64,
    pub seed: u64,
    pub vector: WatermarkVector,
    /// Size of the training subgraph pool.
    pub pool_size: usize,
    /// Sorted by `source_index`.
    pub subgraphs: Vec<WmSubgraph>,
}

pub(crate) fn canonical_edges(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<_> = edges.iter().map(|&(a, b)| ordered(a, b)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `⌈alpha · pool⌉`, ignoring floating-point dust above an integer.
pub fn subgraph_count(alpha: f64, pool: usize) -> usize {
    let raw = alpha * pool as f64;
    ((raw - 1e-9 * raw.max(1.0)).ceil() as usize).clamp(1, pool)
}

/// Draws `⌈alpha · T⌉` training subgraphs, inverts their labels and replaces
/// every feature row with the watermark vector.
pub fn gen_subgraph_wm(train: &[Subgraph], alpha: f64, vector: WatermarkVector, seed: u64) -> Result<SubgraphWatermark> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("watermark rate {alpha} must lie in (0, 1)")));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training subgraphs to sample from".into()));
    }
    for sg in train {
        sg.validate()?;
        if sg.local_features.ncols() != vector.dim() {
            return Err(Error::ShapeMismatch(format!(
                "subgraph features have {} columns, watermark vector {}",
                sg.local_features.ncols(),
                vector.dim()
            )));
        }
    }
    let s = subgraph_count(alpha, train.len());
    let mut r = rng::stream(seed, "wm-subgraphs");
    let mut picks = index::sample(&mut r, train.len(), s).into_vec();
    picks.sort_unstable();
    let subgraphs = picks
        .into_iter()
        .map(|i| {
            let sg = &train[i];
            WmSubgraph {
                source_index: i,
                node_ids: sg.node_ids.clone(),
                local_edges: canonical_edges(&sg.local_edges),
                anchor: sg.anchor,
                original_label: sg.label,
                label: 1 - sg.label,
            }
        })
        .collect();
    Ok(SubgraphWatermark {
        alpha,
        seed,
        vector,
        pool_size: train.len(),
        subgraphs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(t: usize) -> Vec<Subgraph> {
        (0..t)
            .map(|i| Subgraph {
                node_ids: vec![2 * i, 2 * i + 1, 100 + i],
                local_edges: vec![(0, 2)],
                local_features: Array2::from_elem((3, 2), i as f64),
                anchor: (0, 1),
                label: (i % 2) as u8,
            })
            .collect()
    }

    #[test]
    fn counts_use_ceiling() {
        assert_eq!(subgraph_count(0.30, 10), 3);
        assert_eq!(subgraph_count(0.001, 10), 1);
        assert_eq!(subgraph_count(0.25, 10), 3);
    }

    #[test]
    fn labels_inverted_structure_kept() {
        let train = pool(10);
        let wm = gen_subgraph_wm(&train, 0.3, WatermarkVector::generate(2, 4).unwrap(), 4).unwrap();
        assert_eq!(wm.subgraphs.len(), 3);
        let mut changed = 0;
        for s in &wm.subgraphs {
            let src = &train[s.source_index];
            assert_eq!(s.local_edges, canonical_edges(&src.local_edges));
            assert_eq!(s.label, 1 - src.label);
            let m = s.materialize(&wm.vector).unwrap();
            assert!(m.local_features.rows().into_iter().all(|r| r.to_vec() == wm.vector.w));
            changed += 1;
        }
        assert_eq!(changed, 3);
        let distinct: std::collections::BTreeSet<_> = wm.subgraphs.iter().map(|s| s.source_index).collect();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(gen_subgraph_wm(&pool(4), 0.5, WatermarkVector::generate(3, 0).unwrap(), 0).is_err());
    }
}
