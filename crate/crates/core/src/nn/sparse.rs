use ndarray::{Array2, ArrayView2};

use crate::graph::{Adjacency, Subgraph};

/// Row-compressed sparse operator applied to dense matrices from the left.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: impl Iterator<Item = Vec<(usize, f64)>>) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Csr { offsets, cols, vals }
    }

    pub fn nrows(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `self · h`
    pub fn apply(&self, h: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows(), h.ncols()));
        for (i, mut row) in out.outer_iter_mut().enumerate() {
            for k in self.offsets[i]..self.offsets[i + 1] {
                row.scaled_add(self.vals[k], &h.row(self.cols[k]));
            }
        }
        out
    }

    pub fn to_dense(&self, ncols: usize) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows(), ncols));
        for i in 0..self.nrows() {
            for k in self.offsets[i]..self.offsets[i + 1] {
                out[[i, self.cols[k]]] += self.vals[k];
            }
        }
        out
    }
}

/// Message-passing operators derived from an adjacency.
///
/// `gcn` is the symmetric normalization `D̃^{-1/2}(A + I)D̃^{-1/2}`, `mean`
/// is the row-normalized neighbor average `D^{-1}A` (isolated rows are zero)
/// and `mean_t` its transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagation {
    pub gcn: Csr,
    pub mean: Csr,
    pub mean_t: Csr,
}

impl Propagation {
    pub fn new(adj: &Adjacency) -> Self {
        let n = adj.num_nodes();
        let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((adj.degree(i) + 1) as f64).sqrt()).collect();
        let gcn = Csr::from_rows((0..n).map(|i| {
            let mut row: Vec<(usize, f64)> = adj
                .neighbors(i)
                .iter()
                .map(|&j| (j, inv_sqrt[i] * inv_sqrt[j]))
                .collect();
            row.push((i, inv_sqrt[i] * inv_sqrt[i]));
            row.sort_unstable_by_key(|&(j, _)| j);
            row
        }));
        let inv_deg = |i: usize| {
            let d = adj.degree(i);
            if d == 0 {
                0.0
            } else {
                1.0 / d as f64
            }
        };
        let mean = Csr::from_rows((0..n).map(|i| adj.neighbors(i).iter().map(|&j| (j, inv_deg(i))).collect()));
        let mean_t = Csr::from_rows((0..n).map(|j| adj.neighbors(j).iter().map(|&i| (i, inv_deg(i))).collect()));
        Propagation { gcn, mean, mean_t }
    }

    pub fn num_nodes(&self) -> usize {
        self.gcn.nrows()
    }
}

/// A graph ready for encoding: propagation operators plus node features.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInput {
    pub prop: Propagation,
    pub features: Array2<f64>,
}

impl GraphInput {
    pub fn new(adj: &Adjacency, features: Array2<f64>) -> Self {
        GraphInput {
            prop: Propagation::new(adj),
            features,
        }
    }

    pub fn from_subgraph(sg: &Subgraph) -> Self {
        let adj = Adjacency::from_edges(sg.num_nodes(), sg.local_edges.iter().copied());
        GraphInput::new(&adj, sg.local_features.clone())
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }
}
