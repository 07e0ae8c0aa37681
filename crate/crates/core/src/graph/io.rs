//! Edge-list and feature-file readers/writers.
//!
//! Edge list: one `u<ws>v` pair per line, `#` starts a comment, and an
//! optional first record `N <num_nodes>` fixes the node count. Feature file:
//! one `id f1 ... fd` line per node.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::Graph;
use crate::error::{Error, Result};

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text)
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut header: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    let mut seen_record = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap_or_default();
        if !seen_record && first == "N" {
            let count = tokens
                .next()
                .ok_or_else(|| parse_err(line_no, "header `N` without a node count"))?;
            header = Some(
                count
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad node count `{count}`")))?,
            );
            seen_record = true;
            continue;
        }
        seen_record = true;
        let second = tokens
            .next()
            .ok_or_else(|| parse_err(line_no, "expected two node ids"))?;
        if tokens.next().is_some() {
            return Err(parse_err(line_no, "trailing tokens after node pair"));
        }
        let u: usize = first
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad node id `{first}`")))?;
        let v: usize = second
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad node id `{second}`")))?;
        if u == v {
            return Err(Error::SelfLoop { line: line_no });
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }

    let implied = max_id.map_or(0, |m| m + 1);
    let num_nodes = match header {
        Some(n) if n < implied => {
            return Err(Error::NodeOutOfRange {
                id: implied - 1,
                num_nodes: n,
            })
        }
        Some(n) => n,
        None => implied,
    };
    Graph::new(num_nodes, edges)
}

pub fn write_edge_list(graph: &Graph) -> String {
    let mut out = format!("N {}\n", graph.num_nodes());
    for &(u, v) in graph.edges() {
        let _ = writeln!(out, "{u}\t{v}");
    }
    out
}

pub fn load_features(path: impl AsRef<Path>, num_nodes: usize) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text, num_nodes)
}

pub fn parse_features(text: &str, num_nodes: usize) -> Result<Array2<f64>> {
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; num_nodes];
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let id_tok = tokens.next().unwrap_or_default();
        let id: usize = id_tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad node id `{id_tok}`")))?;
        if id >= num_nodes {
            return Err(Error::NodeOutOfRange { id, num_nodes });
        }
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("bad feature value `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_err(
                    line_no,
                    format!("expected {d} feature values, found {}", values.len()),
                ))
            }
            _ => {}
        }
        if rows[id].replace(values).is_some() {
            return Err(parse_err(line_no, format!("duplicate features for node {id}")));
        }
    }
    let dim = dim.unwrap_or(0);
    let mut features = Array2::zeros((num_nodes, dim));
    for (id, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| parse_err(0, format!("missing features for node {id}")))?;
        for (j, x) in row.into_iter().enumerate() {
            features[[id, j]] = x;
        }
    }
    Ok(features)
}

/// Writes features with round-trip (`{:?}`-precision) decimals.
pub fn write_features(features: &Array2<f64>) -> String {
    let mut out = String::new();
    for (id, row) in features.outer_iter().enumerate() {
        let _ = write!(out, "{id}");
        for x in row {
            let _ = write!(out, " {x:?}");
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}
