use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::ordered;
use crate::nn::{softmax, GraphInput, LinkPredictor};
use crate::wm::NodeRepWatermark;

/// Anything that can answer "is there a link between u and v".
pub trait LinkScorer: Sync {
    fn num_nodes(&self) -> usize;
    /// Probability that `(u, v)` is a link.
    fn link_probability(&self, u: usize, v: usize) -> Result<f64>;
}

/// A node-rep model deployed on a fixed graph; embeddings are computed once.
pub struct ModelScorer {
    model: LinkPredictor,
    embeddings: Array2<f64>,
}

impl ModelScorer {
    pub fn new(model: LinkPredictor, input: &GraphInput) -> Result<Self> {
        let embeddings = model.encode(input)?;
        Ok(ModelScorer { model, embeddings })
    }
}

impl LinkScorer for ModelScorer {
    fn num_nodes(&self) -> usize {
        self.embeddings.nrows()
    }

    fn link_probability(&self, u: usize, v: usize) -> Result<f64> {
        let logits = self.model.score_pairs(&self.embeddings, &[(u, v)])?;
        Ok(softmax(logits.view())[[0, 1]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Answer {
    pub exists: bool,
    /// Link probability after any inversion.
    pub score: f64,
}

/// Query front-end. With the defense on, every pair inside the trigger node
/// set gets its answer inverted, so a querier who believes the model
/// reconstructs the original graph rather than the flipped one.
pub struct Server<S> {
    scorer: S,
    flipped: BTreeSet<(usize, usize)>,
}

impl<S: LinkScorer> Server<S> {
    pub fn new(scorer: S, defense: Option<&NodeRepWatermark>) -> Self {
        let flipped = defense.map_or_else(BTreeSet::new, |wm| {
            let nodes = &wm.trigger_nodes;
            nodes
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| nodes[i + 1..].iter().map(move |&b| ordered(a, b)))
                .collect()
        });
        Server { scorer, flipped }
    }

    pub fn flipped_pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.flipped
    }

    pub fn query(&self, u: usize, v: usize) -> Result<Answer> {
        let n = self.scorer.num_nodes();
        for id in [u, v] {
            if id >= n {
                return Err(Error::NodeOutOfRange { id, num_nodes: n });
            }
        }
        if u == v {
            return Err(Error::InvalidArgument(format!("self-pair ({u}, {v})")));
        }
        let p = self.scorer.link_probability(u, v)?;
        let flip = self.flipped.contains(&ordered(u, v));
        Ok(Answer {
            exists: (p > 0.5) != flip,
            score: if flip { 1.0 - p } else { p },
        })
    }

    /// Answers `u v` lines with `1 <p>` or `0 <p>`; bad lines get `error <msg>`.
    /// Returns the number of queries answered.
    pub fn serve_lines(&self, input: impl BufRead, mut output: impl Write) -> Result<usize> {
        let mut answered = 0;
        let io = |e| Error::io("<stream>", e);
        for line in input.lines() {
            let line = line.map_err(io)?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let reply = parse_query(line).and_then(|(u, v)| self.query(u, v));
            match reply {
                Ok(a) => {
                    writeln!(output, "{} {}", u8::from(a.exists), a.score).map_err(io)?;
                    answered += 1;
                }
                Err(e) => writeln!(output, "error {e}").map_err(io)?,
            }
            output.flush().map_err(io)?;
        }
        Ok(answered)
    }
}

fn parse_query(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(u)), Some(Ok(v)), None) => Ok((u, v)),
        _ => Err(Error::Parse { line: 1, message: format!("expected \"u v\", got {line:?}") }),
    }
}
