//! Watermark-removal and piracy attacks.

use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::embed::fit;
use crate::error::{Error, Result};
use crate::graph::{LabeledPair, LinkDataset, Split};
use crate::nn::{one_hot, softmax, Adam, Arch, LinkPredictor, ParamKind, Params, Task};
use crate::rng;

/// Test-AUC drop beyond which an attack is considered to have ruined the model.
pub const UTILITY_DROP: f64 = 0.10;
pub const ATTACK_EPOCHS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    WatermarkSuccess,
    WatermarkFailure,
}

/// Watermark survives unless the attack pushes its AUC to `t` or below
/// while keeping test AUC within [`UTILITY_DROP`].
pub fn verdict(auc_wm_post: f64, auc_test_pre: f64, auc_test_post: f64, t: f64) -> Verdict {
    if auc_wm_post <= t && auc_test_pre - auc_test_post <= UTILITY_DROP {
        Verdict::WatermarkFailure
    } else {
        Verdict::WatermarkSuccess
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub kind: String,
    pub auc_test_pre: f64,
    pub auc_test_post: f64,
    pub auc_wm_pre: f64,
    pub auc_wm_post: f64,
    pub t: f64,
    pub verdict: Verdict,
}

impl AttackReport {
    /// Scores `before` and `after` on both tasks and applies [`verdict`].
    pub fn measure(kind: impl Into<String>, before: &LinkPredictor, after: &LinkPredictor, test: &Task, wm: &Task, t: f64) -> Result<Self> {
        let (auc_test_pre, auc_test_post) = (test.auc(before)?, test.auc(after)?);
        let (auc_wm_pre, auc_wm_post) = (wm.auc(before)?, wm.auc(after)?);
        Ok(AttackReport {
            kind: kind.into(),
            auc_test_pre,
            auc_test_post,
            auc_wm_pre,
            auc_wm_post,
            t,
            verdict: verdict(auc_wm_post, auc_test_pre, auc_test_post, t),
        })
    }
}

/// The attacker's share of the test split and the remainder kept for scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackerData {
    pub query: Vec<LabeledPair>,
    pub eval: Vec<LabeledPair>,
}

/// A seeded random half of the test positives plus as many test negatives;
/// the rest of the test split is the evaluation half.
pub fn attacker_split(ds: &LinkDataset, seed: u64) -> AttackerData {
    let mut r = rng::stream(seed, "attacker-split");
    let test = ds.split(Split::Test);
    let mut pos: Vec<LabeledPair> = test.iter().copied().filter(|p| p.label == 1).collect();
    let mut neg: Vec<LabeledPair> = test.iter().copied().filter(|p| p.label == 0).collect();
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);
    let half = pos.len() / 2;
    let query: Vec<LabeledPair> = pos[..half].iter().chain(&neg[..half.min(neg.len())]).copied().collect();
    let eval: Vec<LabeledPair> = pos[half..].iter().chain(&neg[half.min(neg.len())..]).copied().collect();
    AttackerData { query, eval }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FinetuneMode {
    /// Fine-tune the last layer only.
    Ftll,
    /// Reinitialise the last layer, then train it alone.
    Rtll,
    /// Fine-tune every layer.
    Ftal,
    /// Reinitialise the last layer, then train every layer.
    Rtal,
}

impl FinetuneMode {
    pub const ALL: [FinetuneMode; 4] = [FinetuneMode::Ftll, FinetuneMode::Rtll, FinetuneMode::Ftal, FinetuneMode::Rtal];

    pub fn name(self) -> &'static str {
        match self {
            FinetuneMode::Ftll => "FTLL",
            FinetuneMode::Rtll => "RTLL",
            FinetuneMode::Ftal => "FTAL",
            FinetuneMode::Rtal => "RTAL",
        }
    }

    fn reinit(self) -> bool {
        matches!(self, FinetuneMode::Rtll | FinetuneMode::Rtal)
    }

    fn last_layer_only(self) -> bool {
        matches!(self, FinetuneMode::Ftll | FinetuneMode::Rtll)
    }
}

impl FromStr for FinetuneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FinetuneMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown fine-tuning mode {s:?}")))
    }
}

/// Fine-tuning attack on the attacker's labelled data.
pub fn finetune(model: &LinkPredictor, data: &Task, mode: FinetuneMode, epochs: usize, lr: f64, seed: u64) -> Result<LinkPredictor> {
    let mut m = model.clone();
    if mode.reinit() {
        m.reinit_final_layer(&mut rng::stream(seed, "attack-reinit"));
    }
    let mask: Option<Vec<bool>> = mode.last_layer_only().then(|| {
        let last = m.final_layer_indices();
        (0..m.params().len()).map(|i| last.contains(&i)).collect()
    });
    let mut opt = Adam::new(m.params(), lr);
    fit(&mut m, &mut opt, data, epochs, mask.as_deref())?;
    Ok(m)
}

/// Global magnitude pruning: zeroes the `⌊fraction · count⌋` weight entries of
/// smallest magnitude across all weight matrices. Biases are left alone.
pub fn prune(model: &LinkPredictor, fraction: f64) -> Result<LinkPredictor> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("pruning fraction {fraction} outside [0, 1]")));
    }
    let mut m = model.clone();
    let is_weight: Vec<bool> = m.layout().iter().map(|s| s.kind == ParamKind::Weight).collect();
    prune_tensors(m.params_mut(), &is_weight, fraction);
    Ok(m)
}

fn prune_tensors(params: &mut Params, is_weight: &[bool], fraction: f64) {
    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for (t, tensor) in params.0.iter().enumerate().filter(|(t, _)| is_weight[*t]) {
        entries.extend(tensor.iter().enumerate().map(|(k, w)| (w.abs(), t, k)));
    }
    let count = (fraction * entries.len() as f64).floor() as usize;
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    for &(_, t, k) in &entries[..count] {
        let tensor = &mut params.0[t];
        let cols = tensor.ncols();
        tensor[[k / cols, k % cols]] = 0.0;
    }
}

/// Per-tensor uniform affine quantisation to `2^bits` levels spanning the
/// tensor's range, then dequantisation.
pub fn quantize(model: &LinkPredictor, bits: u32) -> Result<LinkPredictor> {
    if !(1..=63).contains(&bits) {
        return Err(Error::InvalidArgument(format!("bit width {bits} outside 1..=63")));
    }
    let mut m = model.clone();
    for t in m.params_mut().0.iter_mut() {
        quantize_tensor(t, bits);
    }
    Ok(m)
}

fn quantize_tensor(t: &mut Array2<f64>, bits: u32) {
    let levels = 2f64.powi(bits as i32) - 1.0;
    let (lo, hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi <= lo {
        return;
    }
    let step = (hi - lo) / levels;
    t.mapv_inplace(|x| (lo + ((x - lo) / step).round() * step).clamp(lo, hi));
}

/// Pruning followed by fine-tuning; pruned weights are free to regrow.
pub fn fine_prune(model: &LinkPredictor, fraction: f64, mode: FinetuneMode, data: &Task, epochs: usize, lr: f64, seed: u64) -> Result<LinkPredictor> {
    finetune(&prune(model, fraction)?, data, mode, epochs, lr, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Soft,
    Hard,
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soft" => Ok(LabelMode::Soft),
            "hard" => Ok(LabelMode::Hard),
            _ => Err(Error::InvalidArgument(format!("unknown label mode {s:?}"))),
        }
    }
}

/// Architecture and budget of a freshly trained surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub arch: Arch,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
}

fn soft_labels(victim: &LinkPredictor, queries: &Task) -> Result<Array2<f64>> {
    Ok(softmax(queries.logits(victim)?.view()))
}

fn hard_labels(victim: &LinkPredictor, queries: &Task) -> Result<Array2<f64>> {
    let logits = queries.logits(victim)?;
    let labels: Vec<u8> = logits.outer_iter().map(|r| u8::from(r[1] > r[0])).collect();
    Ok(one_hot(&labels))
}

fn train_surrogate(targets: Array2<f64>, queries: &Task, cfg: &SurrogateConfig, seed: u64, round: u64) -> Result<LinkPredictor> {
    let input_dim = match &queries.inputs {
        crate::nn::TaskInputs::Pairs { graph, .. } => graph.features.ncols(),
        crate::nn::TaskInputs::Subgraphs(g) => g.first().map_or(0, |g| g.features.ncols()),
    };
    let mut r = rng::stream(seed, &format!("attack-surrogate#{round}"));
    let mut model = LinkPredictor::new(cfg.arch, input_dim, cfg.hidden, &mut r);
    let task = queries.clone().with_targets(targets)?;
    let mut opt = Adam::new(model.params(), cfg.lr);
    fit(&mut model, &mut opt, &task, cfg.epochs, None)?;
    Ok(model)
}

/// Model extraction from prediction queries. Two rounds chain hard-label
/// extraction `victim → s1 → s2` on the same query set.
pub fn extract(victim: &LinkPredictor, queries: &Task, cfg: &SurrogateConfig, mode: LabelMode, rounds: usize, seed: u64) -> Result<LinkPredictor> {
    match (mode, rounds) {
        (LabelMode::Soft, 1) => train_surrogate(soft_labels(victim, queries)?, queries, cfg, seed, 0),
        (LabelMode::Hard, 1 | 2) => {
            let mut teacher = victim.clone();
            for round in 0..rounds as u64 {
                teacher = train_surrogate(hard_labels(&teacher, queries)?, queries, cfg, seed, round)?;
            }
            Ok(teacher)
        }
        _ => Err(Error::InvalidArgument(format!("unsupported extraction: {mode:?} with {rounds} rounds"))),
    }
}

/// Distillation against `λ · victim softmax + (1 − λ) · ground truth`, which
/// is the λ-weighted sum of the two cross-entropies.
pub fn distill(victim: &LinkPredictor, data: &Task, cfg: &SurrogateConfig, lambda: f64, seed: u64) -> Result<LinkPredictor> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("mixing weight {lambda} outside [0, 1]")));
    }
    let mut targets = soft_labels(victim, data)?;
    targets *= lambda;
    targets.scaled_add(1.0 - lambda, &one_hot(&data.labels));
    train_surrogate(targets, data, cfg, seed, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub epoch: usize,
    pub auc_test: f64,
    pub auc_owner_wm: f64,
    pub auc_pirate_wm: f64,
}

/// Trains a stolen model on the adversary's own trigger set, recording the
/// three AUC curves every `trace_every` epochs (and at epoch 0).
pub fn piracy_embed(
    stolen: &LinkPredictor,
    pirate_wm: &Task,
    owner_wm: &Task,
    test: &Task,
    epochs: usize,
    lr: f64,
    trace_every: usize,
) -> Result<(LinkPredictor, Vec<TracePoint>)> {
    let every = trace_every.max(1);
    let mut m = stolen.clone();
    let mut opt = Adam::new(m.params(), lr);
    let point = |m: &LinkPredictor, epoch| -> Result<TracePoint> {
        Ok(TracePoint {
            epoch,
            auc_test: test.auc(m)?,
            auc_owner_wm: owner_wm.auc(m)?,
            auc_pirate_wm: pirate_wm.auc(m)?,
        })
    };
    let mut trace = vec![point(&m, 0)?];
    for epoch in 1..=epochs {
        fit(&mut m, &mut opt, pirate_wm, 1, None)?;
        if epoch % every == 0 || epoch == epochs {
            trace.push(point(&m, epoch)?);
        }
    }
    Ok((m, trace))
}
