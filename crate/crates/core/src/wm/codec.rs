//! Canonical `.gwm` encoding. All integers are u64 LE, reals f64 LE.
//!
//! ```text
//! "GWM1" | kind u8 (0 node-rep, 1 subgraph) | seed | alpha | vector seed | d | w[d]
//! node-rep:  num_nodes | k | S[k] ascending
//!            | P | P × (u, v, label u8), ascending (u, v), u < v
//!            | E | E × (u, v) ascending, u < v          (flipped graph)
//!            | num_nodes × d feature rows               (flipped features)
//! subgraph:  pool | s | s × record, ascending source index
//!   record:  source | original label u8 | label u8 | n | ids[n]
//!            | anchor (a, b) | E | E × (a, b) ascending, a < b
//! ```

use ndarray::Array2;

use super::node_rep::{NodeRepWatermark, WmPair};
use super::subgraph::{canonical_edges, SubgraphWatermark, WmSubgraph};
use super::{WatermarkSet, WatermarkVector};
use crate::error::{Error, Result};
use crate::graph::ordered;

pub const MAGIC: &[u8; 4] = b"GWM1";
const KIND_NODE_REP: u8 = 0;
const KIND_SUBGRAPH: u8 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u64(&mut self, x: usize) {
        self.0.extend_from_slice(&(x as u64).to_le_bytes());
    }
    fn raw_u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn pairs(&mut self, edges: &[(usize, usize)]) {
        self.u64(edges.len());
        for &(a, b) in edges {
            self.u64(a);
            self.u64(b);
        }
    }
}

fn header(out: &mut Writer, kind: u8, seed: u64, alpha: f64, vector: &WatermarkVector) {
    out.0.extend_from_slice(MAGIC);
    out.u8(kind);
    out.raw_u64(seed);
    out.f64(alpha);
    out.raw_u64(vector.seed);
    out.u64(vector.dim());
    for &x in &vector.w {
        out.f64(x);
    }
}

pub(super) fn encode(set: &WatermarkSet) -> Vec<u8> {
    let mut out = Writer(Vec::new());
    match set {
        WatermarkSet::NodeRep(wm) => {
            header(&mut out, KIND_NODE_REP, wm.seed, wm.alpha, &wm.vector);
            out.u64(wm.num_nodes);
            let mut nodes = wm.trigger_nodes.clone();
            nodes.sort_unstable();
            out.u64(nodes.len());
            for s in nodes {
                out.u64(s);
            }
            let mut pairs: Vec<WmPair> = wm
                .pairs
                .iter()
                .map(|p| {
                    let (u, v) = ordered(p.u, p.v);
                    WmPair { u, v, label: p.label }
                })
                .collect();
            pairs.sort_unstable();
            out.u64(pairs.len());
            for p in pairs {
                out.u64(p.u);
                out.u64(p.v);
                out.u8(p.label);
            }
            out.pairs(&canonical_edges(&wm.wm_edges));
            for x in wm.wm_features.iter() {
                out.f64(*x);
            }
        }
        WatermarkSet::Subgraph(wm) => {
            header(&mut out, KIND_SUBGRAPH, wm.seed, wm.alpha, &wm.vector);
            out.u64(wm.pool_size);
            let mut records: Vec<&WmSubgraph> = wm.subgraphs.iter().collect();
            records.sort_by_key(|s| s.source_index);
            out.u64(records.len());
            for s in records {
                out.u64(s.source_index);
                out.u8(s.original_label);
                out.u8(s.label);
                out.u64(s.node_ids.len());
                for &id in &s.node_ids {
                    out.u64(id);
                }
                out.u64(s.anchor.0);
                out.u64(s.anchor.1);
                out.pairs(&canonical_edges(&s.local_edges));
            }
        }
    }
    out.0
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("watermark", "truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn raw_u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn u64(&mut self) -> Result<usize> {
        usize::try_from(self.raw_u64()?).map_err(|_| Error::format("watermark", "size overflow"))
    }
    /// A count whose items need at least `item_bytes` each.
    fn count(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = self.bytes.len() - self.pos;
        if n.checked_mul(item_bytes).is_none_or(|b| b > remaining) {
            return Err(Error::format("watermark", "count exceeds file"));
        }
        Ok(n)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn label(&mut self) -> Result<u8> {
        match self.u8()? {
            l @ (0 | 1) => Ok(l),
            l => Err(Error::format("watermark", format!("label byte {l}"))),
        }
    }
    fn pairs(&mut self, bound: usize) -> Result<Vec<(usize, usize)>> {
        let n = self.count(16)?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (a, b) = (self.u64()?, self.u64()?);
            if a >= b || b >= bound {
                return Err(Error::format("watermark", format!("bad pair ({a}, {b})")));
            }
            out.push((a, b));
        }
        Ok(out)
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<WatermarkSet> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format("watermark", "bad magic"));
    }
    let kind = r.u8()?;
    let seed = r.raw_u64()?;
    let alpha = r.f64()?;
    let vector_seed = r.raw_u64()?;
    let d = r.count(8)?;
    let w = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let vector = WatermarkVector { w, seed: vector_seed };

    let set = match kind {
        KIND_NODE_REP => {
            let num_nodes = r.u64()?;
            let k = r.count(8)?;
            let trigger_nodes = (0..k).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            if trigger_nodes.iter().any(|&s| s >= num_nodes) || trigger_nodes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::format("watermark", "trigger nodes not ascending or out of range"));
            }
            let p = r.count(17)?;
            let mut pairs = Vec::with_capacity(p);
            for _ in 0..p {
                let (u, v) = (r.u64()?, r.u64()?);
                let label = r.label()?;
                if u >= v || v >= num_nodes {
                    return Err(Error::format("watermark", format!("bad pair ({u}, {v})")));
                }
                pairs.push(WmPair { u, v, label });
            }
            let wm_edges = r.pairs(num_nodes)?;
            let cells = num_nodes
                .checked_mul(d)
                .filter(|c| c.checked_mul(8).is_some_and(|b| b <= bytes.len()))
                .ok_or_else(|| Error::format("watermark", "feature block exceeds file"))?;
            let data = (0..cells).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let wm_features = Array2::from_shape_vec((num_nodes, d), data).expect("length checked");
            WatermarkSet::NodeRep(NodeRepWatermark {
                alpha,
                seed,
                vector,
                num_nodes,
                trigger_nodes,
                pairs,
                wm_edges,
                wm_features,
            })
        }
        KIND_SUBGRAPH => {
            let pool_size = r.u64()?;
            let s = r.count(34)?;
            let mut subgraphs = Vec::with_capacity(s);
            for _ in 0..s {
                let source_index = r.u64()?;
                let original_label = r.label()?;
                let label = r.label()?;
                let n = r.count(8)?;
                let node_ids = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
                let anchor = (r.u64()?, r.u64()?);
                let local_edges = r.pairs(n)?;
                if anchor.0 >= n || anchor.1 >= n || source_index >= pool_size {
                    return Err(Error::format("watermark", "subgraph record out of range"));
                }
                subgraphs.push(WmSubgraph {
                    source_index,
                    node_ids,
                    local_edges,
                    anchor,
                    original_label,
                    label,
                });
            }
            WatermarkSet::Subgraph(SubgraphWatermark {
                alpha,
                seed,
                vector,
                pool_size,
                subgraphs,
            })
        }
        k => return Err(Error::format("watermark", format!("unknown kind {k}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::format("watermark", "trailing bytes"));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::graph::{generate_sbm, init_features, Subgraph};
    use proptest::prelude::*;

    fn node_rep(seed: u64) -> WatermarkSet {
        let g = init_features(generate_sbm(2, 10, 0.4, 0.1, seed).unwrap(), 3, seed).unwrap();
        WatermarkSet::NodeRep(gen_node_rep_wm(&g, 0.3, seed).unwrap())
    }

    fn subgraph_set(seed: u64) -> WatermarkSet {
        let train: Vec<Subgraph> = (0..6)
            .map(|i| Subgraph {
                node_ids: vec![i, i + 10, i + 20],
                local_edges: vec![(1, 2), (0, 2)],
                local_features: ndarray::Array2::zeros((3, 2)),
                anchor: (0, 1),
                label: (i % 2) as u8,
            })
            .collect();
        WatermarkSet::Subgraph(gen_subgraph_wm(&train, 0.5, WatermarkVector::generate(2, seed).unwrap(), seed).unwrap())
    }

    #[test]
    fn serialization_is_stable() {
        let wm = node_rep(3);
        assert_eq!(wm.to_bytes(), wm.to_bytes());
        assert_eq!(&wm.to_bytes()[..4], MAGIC);
        assert_eq!(wm.hash_hex().len(), 64);
    }

    #[test]
    fn entry_order_does_not_matter() {
        let wm = node_rep(4);
        let mut shuffled = wm.clone();
        if let WatermarkSet::NodeRep(n) = &mut shuffled {
            n.pairs.reverse();
            n.wm_edges.reverse();
            n.trigger_nodes.reverse();
        }
        assert_eq!(wm.to_bytes(), shuffled.to_bytes());
    }

    #[test]
    fn label_flip_changes_bytes() {
        let wm = node_rep(5);
        let mut other = wm.clone();
        if let WatermarkSet::NodeRep(n) = &mut other {
            n.pairs[0].label ^= 1;
        }
        assert_ne!(wm.to_bytes(), other.to_bytes());
        assert_ne!(wm.hash_hex(), other.hash_hex());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = node_rep(6).to_bytes();
        assert!(WatermarkSet::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(WatermarkSet::from_bytes(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(WatermarkSet::from_bytes(&bad).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(seed in 0u64..500) {
            for wm in [node_rep(seed), subgraph_set(seed)] {
                let back = WatermarkSet::from_bytes(&wm.to_bytes()).unwrap();
                prop_assert_eq!(&back, &wm);
            }
        }
    }
}
