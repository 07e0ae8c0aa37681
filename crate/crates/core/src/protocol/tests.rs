use std::sync::Arc;

use super::*;
use crate::embed::{embed, Method, TrainConfig};
use crate::graph::{generate_sbm, init_features, split_links, Adjacency, Split, SplitRatios};
use crate::nn::{GraphInput, Pathway, Task};
use crate::wm::gen_node_rep_wm;

fn dataset() -> LinkDataset {
    let g = init_features(generate_sbm(2, 20, 0.4, 0.02, 1).unwrap(), 8, 2).unwrap();
    split_links(&g, SplitRatios::default(), 3).unwrap()
}

fn params() -> WmParams {
    WmParams { pathway: Pathway::NodeRep, alpha: 0.2, seed: 4 }
}

fn samples() -> AucSamples {
    AucSamples::new(vec![0.42, 0.48, 0.51, 0.55, 0.46], vec![0.91, 0.94, 0.97, 0.93, 0.95])
}

fn claim<'a>(who: &'a str, wm: &'a [u8], ckpt: &'a [u8], s: &'a AucSamples) -> Claim<'a> {
    Claim { plaintiff: who, wm_bytes: wm, checkpoint_bytes: ckpt, samples: s, gamma: 0.99, n: 1000, seed: 6 }
}

fn train(ds: &LinkDataset, wm: &WatermarkSet, method: Method) -> Vec<u8> {
    let input = Arc::new(GraphInput::new(ds.mp_adjacency(), ds.features().clone()));
    let task = Task::from_labeled_pairs(input, &ds.split(Split::Train));
    let cfg = TrainConfig { hidden: 16, epochs: 150, lr: 0.01, seed: 5, method, ..TrainConfig::default() };
    checkpoint::to_bytes(&embed(&task, &wm.task().unwrap(), 8, &cfg).unwrap().model)
}

#[test]
fn registration_posts_reproducible_hash() {
    let dir = tempfile::tempdir().unwrap();
    let board = BulletinBoard::new(dir.path().join("board.jsonl"));
    let ds = dataset();
    let (a, ra) = register(&ds, &params(), &board, "owner").unwrap();
    let (b, rb) = register(&ds, &WmParams { seed: 5, ..params() }, &board, "other").unwrap();
    assert_eq!(a.hash_hex(), ra.hash);
    assert_eq!(WatermarkSet::from_bytes(&a.to_bytes()).unwrap().hash_hex(), ra.hash);
    assert_ne!(a.hash_hex(), b.hash_hex());
    assert_eq!(board.records().unwrap(), vec![ra, rb]);
    assert_eq!(wm::generate(&ds, &params()).unwrap().hash_hex(), a.hash_hex());
}

#[test]
fn subgraph_pathway_registers() {
    let dir = tempfile::tempdir().unwrap();
    let board = BulletinBoard::new(dir.path().join("board.jsonl"));
    let p = WmParams { pathway: Pathway::Subgraph { hops: 1 }, ..params() };
    let (set, rec) = register(&dataset(), &p, &board, "owner").unwrap();
    assert_eq!(set.kind(), "subgraph");
    assert_eq!(set.hash_hex(), rec.hash);
}

#[test]
fn dispute_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let board = BulletinBoard::new(dir.path().join("board.jsonl"));
    let ds = dataset();
    let (set, _) = register(&ds, &params(), &board, "owner").unwrap();
    let wm_bytes = set.to_bytes();
    let marked = train(&ds, &set, Method::Genie);
    let clean = train(&ds, &set, Method::Clean);
    let s = samples();
    let before = std::fs::read(board.path()).unwrap();

    let v = dispute(&board, &claim("owner", &wm_bytes, &marked, &s)).unwrap();
    assert_eq!((v.winner, v.reason), (Party::Plaintiff, Reason::AucAboveT), "{v:?}");
    assert!(v.auc.unwrap() > v.t.unwrap());
    assert_eq!(v.checkpoint_hash, hash_bytes(&marked));

    let v = dispute(&board, &claim("owner", &wm_bytes, &clean, &s)).unwrap();
    assert_eq!((v.winner, v.reason), (Party::Defendant, Reason::AucBelowT), "{v:?}");

    let other = wm::generate(&ds, &WmParams { seed: 77, ..params() }).unwrap().to_bytes();
    let v = dispute(&board, &claim("stranger", &other, &marked, &s)).unwrap();
    assert_eq!((v.winner, v.reason, v.t), (Party::Defendant, Reason::NoRecord, None));

    let mut tampered = set.clone();
    if let WatermarkSet::NodeRep(n) = &mut tampered {
        n.pairs[0].label ^= 1;
    }
    let v = dispute(&board, &claim("owner", &tampered.to_bytes(), &marked, &s)).unwrap();
    assert_eq!((v.winner, v.reason), (Party::Defendant, Reason::HashMismatch));

    assert_eq!(std::fs::read(board.path()).unwrap(), before);
}

#[test]
fn verdict_json_has_both_hashes() {
    let v = DisputeVerdict {
        winner: Party::Plaintiff,
        reason: Reason::AucAboveT,
        t: Some(0.7),
        auc: Some(0.9),
        certificate: Some(true),
        record_ts: Some(1),
        wm_hash: "a".into(),
        checkpoint_hash: "b".into(),
    };
    let json = serde_json::to_value(&v).unwrap();
    assert_eq!(json["winner"], "plaintiff");
    assert_eq!(json["reason"], "auc_above_t");
    assert_eq!(json["wm_hash"], "a");
    assert_eq!(json["checkpoint_hash"], "b");
}

/// Answers exactly according to a fixed adjacency.
struct GraphOracle(Adjacency);

impl LinkScorer for GraphOracle {
    fn num_nodes(&self) -> usize {
        self.0.num_nodes()
    }
    fn link_probability(&self, u: usize, v: usize) -> Result<f64> {
        Ok(if self.0.has_edge(u, v) { 0.9 } else { 0.1 })
    }
}

#[test]
fn defense_hides_the_flipped_graph() {
    let g = init_features(generate_sbm(2, 10, 0.4, 0.1, 8).unwrap(), 4, 1).unwrap();
    let wm = gen_node_rep_wm(&g, 0.3, 2).unwrap();
    let k = wm.trigger_nodes.len();
    let plain = Server::new(GraphOracle(wm.wm_adjacency()), None);
    let guarded = Server::new(GraphOracle(wm.wm_adjacency()), Some(&wm));
    assert!(plain.flipped_pairs().is_empty());
    assert_eq!(guarded.flipped_pairs().len(), k * (k - 1) / 2);
    for u in 0..20 {
        for v in (u + 1)..20 {
            let raw = plain.query(u, v).unwrap();
            let ans = guarded.query(u, v).unwrap();
            assert_eq!(raw.exists, wm.wm_adjacency().has_edge(u, v));
            assert_eq!(ans.exists, g.has_edge(u, v), "({u}, {v})");
            if !wm.is_internal(u, v) {
                assert_eq!(ans, raw);
            } else {
                assert!((ans.score - (1.0 - raw.score)).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn model_scorer_and_line_protocol() {
    let ds = dataset();
    let set = wm::generate(&ds, &params()).unwrap();
    let model = checkpoint::from_bytes(&train(&ds, &set, Method::Genie)).unwrap();
    let input = GraphInput::new(ds.mp_adjacency(), ds.features().clone());
    let server = Server::new(ModelScorer::new(model.clone(), &input).unwrap(), None);
    let p = server.query(0, 1).unwrap().score;
    let logits = model.pair_logits(&input, &[(0, 1)]).unwrap();
    assert!((p - crate::nn::softmax(logits.view())[[0, 1]]).abs() < 1e-12);

    let mut out = Vec::new();
    let n = server.serve_lines("0 1\n\nbad\n3 99\n1 0\n".as_bytes(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(n, 2);
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with(if p > 0.5 { "1 " } else { "0 " }));
    assert!(lines[1].starts_with("error") && lines[2].starts_with("error"));
    assert_eq!(lines[0], lines[3]);
    assert!(server.query(2, 2).is_err());
}
