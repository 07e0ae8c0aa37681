//! Judge-side ownership workflow: registration on a bulletin board,
//! dispute resolution and a query server with the trigger-hiding defense.
//!
//! The judge is a library role here. Its trusted state is the board file and
//! whatever it computes locally; everything else arrives as bytes from the
//! parties and is hashed before use.

mod board;
mod serve;

use serde::{Deserialize, Serialize};

pub use board::{BoardRecord, BulletinBoard};
pub use serve::{Answer, LinkScorer, ModelScorer, Server};

use crate::error::Result;
use crate::graph::LinkDataset;
use crate::nn::checkpoint;
use crate::stats::{dwt_threshold, AucSamples};
use crate::wm::{self, hash_bytes, WatermarkSet, WmParams};

/// The judge builds the trigger set for `ds`, posts its hash and hands the
/// set back to the owner.
pub fn register(ds: &LinkDataset, params: &WmParams, board: &BulletinBoard, who: &str) -> Result<(WatermarkSet, BoardRecord)> {
    let set = wm::generate(ds, params)?;
    let rec = board.append(&set.hash_hex(), who)?;
    Ok((set, rec))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Plaintiff,
    Defendant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    /// The plaintiff has nothing on the board.
    NoRecord,
    /// The plaintiff has records, none of which matches the submitted file.
    HashMismatch,
    AucBelowT,
    AucAboveT,
}

/// Outcome of a dispute. `t` and `auc` are absent when the case fails on the
/// board check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisputeVerdict {
    pub winner: Party,
    pub reason: Reason,
    pub t: Option<f64>,
    pub auc: Option<f64>,
    pub certificate: Option<bool>,
    pub record_ts: Option<u64>,
    pub wm_hash: String,
    pub checkpoint_hash: String,
}

/// Everything the judge receives for one case.
pub struct Claim<'a> {
    pub plaintiff: &'a str,
    pub wm_bytes: &'a [u8],
    pub checkpoint_bytes: &'a [u8],
    pub samples: &'a AucSamples,
    pub gamma: f64,
    pub n: usize,
    pub seed: u64,
}

/// Resolves a claim. The board is only read.
pub fn dispute(board: &BulletinBoard, claim: &Claim<'_>) -> Result<DisputeVerdict> {
    let wm_hash = hash_bytes(claim.wm_bytes);
    let checkpoint_hash = hash_bytes(claim.checkpoint_bytes);
    let own: Vec<BoardRecord> = board.records()?.into_iter().filter(|r| r.who == claim.plaintiff).collect();
    let mut verdict = DisputeVerdict {
        winner: Party::Defendant,
        reason: Reason::NoRecord,
        t: None,
        auc: None,
        certificate: None,
        record_ts: None,
        wm_hash,
        checkpoint_hash,
    };
    let Some(rec) = own.iter().find(|r| r.hash == verdict.wm_hash) else {
        if !own.is_empty() {
            verdict.reason = Reason::HashMismatch;
        }
        return Ok(verdict);
    };
    verdict.record_ts = Some(rec.ts);

    let set = WatermarkSet::from_bytes(claim.wm_bytes)?;
    let suspect = checkpoint::from_bytes(claim.checkpoint_bytes)?;
    let report = dwt_threshold(&claim.samples.clean, &claim.samples.watermarked, claim.n, claim.gamma, claim.seed)?;
    let auc = set.task()?.auc(&suspect)?;
    let owned = auc > report.t;
    verdict.winner = if owned { Party::Plaintiff } else { Party::Defendant };
    verdict.reason = if owned { Reason::AucAboveT } else { Reason::AucBelowT };
    verdict.t = Some(report.t);
    verdict.auc = Some(auc);
    verdict.certificate = Some(report.certificate);
    Ok(verdict)
}

#[cfg(test)]
mod tests;
