use std::collections::{HashMap, VecDeque};

use ndarray::Array2;

use super::{ordered, LabeledPair, LinkDataset};
use crate::error::{Error, Result};

/// Enclosing subgraph of a candidate link. Local node 0 and 1 are the endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Subgraph {
    pub node_ids: Vec<usize>,
    pub local_edges: Vec<(usize, usize)>,
    pub local_features: Array2<f64>,
    pub anchor: (usize, usize),
    pub label: u8,
}

impl Subgraph {
    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node_ids.len();
        if n == 0 {
            return Err(Error::EmptySubgraph);
        }
        if self.local_features.nrows() != n {
            return Err(Error::ShapeMismatch(format!(
                "subgraph has {n} nodes but {} feature rows",
                self.local_features.nrows()
            )));
        }
        let (a, b) = self.anchor;
        if a >= n || b >= n {
            return Err(Error::InvalidArgument("anchor outside subgraph".into()));
        }
        for &(u, v) in &self.local_edges {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidArgument(format!("invalid local edge ({u}, {v})")));
            }
        }
        let mut ids = self.node_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != n {
            return Err(Error::InvalidArgument("duplicate node ids in subgraph".into()));
        }
        if self.label > 1 {
            return Err(Error::InvalidArgument(format!("label {} is not 0/1", self.label)));
        }
        Ok(())
    }
}

/// Collects the nodes within `k` hops of either endpoint over the message-passing
/// graph. The target link itself is removed from the local edges.
///
/// Local order: the two endpoints, then the rest by (hop distance, node id).
pub fn extract_khop(ds: &LinkDataset, pair: &LabeledPair, k: usize) -> Result<Subgraph> {
    let (u, v) = (pair.u, pair.v);
    let adj = ds.mp_adjacency();
    let n = adj.num_nodes();
    for id in [u, v] {
        if id >= n {
            return Err(Error::NodeOutOfRange { id, num_nodes: n });
        }
    }
    if u == v {
        return Err(Error::InvalidArgument("subgraph endpoints must differ".into()));
    }

    let mut dist: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in [u, v] {
        dist.insert(s, 0);
        queue.push_back(s);
    }
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == k {
            continue;
        }
        for &y in adj.neighbors(x) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                e.insert(d + 1);
                queue.push_back(y);
            }
        }
    }

    let mut rest: Vec<(usize, usize)> = dist
        .iter()
        .filter(|(&id, _)| id != u && id != v)
        .map(|(&id, &d)| (d, id))
        .collect();
    rest.sort_unstable();
    let mut node_ids = vec![u, v];
    node_ids.extend(rest.into_iter().map(|(_, id)| id));

    let local: HashMap<usize, usize> = node_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let target = ordered(u, v);
    let mut local_edges = Vec::new();
    for (i, &a) in node_ids.iter().enumerate() {
        for &b in adj.neighbors(a) {
            if let Some(&j) = local.get(&b) {
                if i < j && ordered(a, b) != target {
                    local_edges.push((i, j));
                }
            }
        }
    }
    local_edges.sort_unstable();

    let dim = ds.features().ncols();
    let mut local_features = Array2::zeros((node_ids.len(), dim));
    for (i, &id) in node_ids.iter().enumerate() {
        local_features.row_mut(i).assign(&ds.features().row(id));
    }

    Ok(Subgraph {
        node_ids,
        local_edges,
        local_features,
        anchor: (0, 1),
        label: pair.label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Adjacency, Split};
    use std::collections::BTreeSet;

    fn dataset(n: usize, edges: &[(usize, usize)]) -> LinkDataset {
        let adj = Adjacency::from_edges(n, edges.iter().copied());
        LinkDataset::new(adj, Array2::zeros((n, 2)), Vec::new()).unwrap()
    }

    fn pair(u: usize, v: usize) -> LabeledPair {
        LabeledPair { u, v, label: 1, split: Split::Train }
    }

    fn original_edges(sg: &Subgraph) -> BTreeSet<(usize, usize)> {
        sg.local_edges
            .iter()
            .map(|&(a, b)| ordered(sg.node_ids[a], sg.node_ids[b]))
            .collect()
    }

    #[test]
    fn path_one_hop_drops_target_edge() {
        let ds = dataset(4, &[(0, 1), (1, 2), (2, 3)]);
        let sg = extract_khop(&ds, &pair(1, 2), 1).unwrap();
        let ids: BTreeSet<_> = sg.node_ids.iter().copied().collect();
        assert_eq!(ids, BTreeSet::from([0, 1, 2, 3]));
        assert_eq!(original_edges(&sg), BTreeSet::from([(0, 1), (2, 3)]));
        assert_eq!(sg.anchor, (0, 1));
        assert_eq!((sg.node_ids[0], sg.node_ids[1]), (1, 2));
        sg.validate().unwrap();
    }

    #[test]
    fn isolated_pair() {
        let ds = dataset(5, &[(2, 3)]);
        let sg = extract_khop(&ds, &pair(0, 1), 2).unwrap();
        assert_eq!(sg.node_ids, vec![0, 1]);
        assert!(sg.local_edges.is_empty());
    }

    #[test]
    fn zero_hops_keeps_endpoints_only() {
        let ds = dataset(4, &[(0, 1), (1, 2), (2, 3)]);
        let sg = extract_khop(&ds, &pair(1, 2), 0).unwrap();
        assert_eq!(sg.node_ids, vec![1, 2]);
        assert!(sg.local_edges.is_empty());
    }

    #[test]
    fn two_hops_on_path_matches_bfs() {
        let ds = dataset(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]);
        let sg = extract_khop(&ds, &pair(3, 4), 2).unwrap();
        let ids: BTreeSet<_> = sg.node_ids.iter().copied().collect();
        assert_eq!(ids, BTreeSet::from([1, 2, 3, 4, 5, 6]));
        assert_eq!(original_edges(&sg), BTreeSet::from([(1, 2), (2, 3), (4, 5), (5, 6)]));
    }
}
