use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::rng;

/// Stochastic block model with `blocks` equal blocks of `per_block` nodes.
///
/// Nodes `b * per_block .. (b + 1) * per_block` form block `b`. Each pair is
/// connected independently with `p_in` inside a block and `p_out` across.
pub fn generate_sbm(blocks: usize, per_block: usize, p_in: f64, p_out: f64, seed: u64) -> Result<Graph> {
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("{name} = {p} is not a probability")));
        }
    }
    let n = blocks * per_block;
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if u / per_block == v / per_block { p_in } else { p_out };
            // Draw unconditionally so the stream does not depend on p.
            let x: f64 = rng.random();
            if x < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}
