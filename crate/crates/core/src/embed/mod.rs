//! Watermark embedding: interleaved two-step training plus four baselines.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Adam, Arch, LinkPredictor, Params, Task};
use crate::rng;

/// Epoch budget of the fine-tuning baseline.
pub const FINETUNE_EPOCHS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Alternating train / watermark steps sharing one optimizer.
    Genie,
    /// Clean training followed by fine-tuning on the trigger set only.
    Finetune,
    /// Trigger samples merged into the training set.
    Poison,
    /// Single step on the summed losses.
    Uniform,
    /// Single step on the min-norm convex combination of both gradients.
    Mgda,
    /// No watermark.
    Clean,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Genie, Method::Finetune, Method::Poison, Method::Uniform, Method::Mgda, Method::Clean];

    pub fn name(self) -> &'static str {
        match self {
            Method::Genie => "genie",
            Method::Finetune => "finetune",
            Method::Poison => "poison",
            Method::Uniform => "uniform",
            Method::Mgda => "mgda",
            Method::Clean => "clean",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

fn default_hidden() -> usize {
    256
}
fn default_epochs() -> usize {
    400
}
fn default_lr() -> f64 {
    1e-3
}
fn default_arch() -> Arch {
    Arch::Gcn
}
fn default_method() -> Method {
    Method::Genie
}

/// Training hyperparameters, read from and written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_arch")]
    pub arch: Arch,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: Method,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: default_arch(),
            hidden: default_hidden(),
            epochs: default_epochs(),
            lr: default_lr(),
            seed: 0,
            method: default_method(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden dimension must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fresh Xavier-initialised model on the seed's `init` stream.
    pub fn init_model(&self, input_dim: usize) -> LinkPredictor {
        LinkPredictor::new(self.arch, input_dim, self.hidden, &mut rng::stream(self.seed, "init"))
    }
}

/// Losses observed during one epoch, before that epoch's updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: Option<f64>,
    pub wm: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Embedded {
    pub model: LinkPredictor,
    pub optimizer: Adam,
    pub history: Vec<EpochLoss>,
}

fn checked(loss: f64, grads: &Params, epoch: usize, phase: &'static str) -> Result<()> {
    if loss.is_finite() && grads.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss { epoch, phase })
    }
}

fn check_dims(model: &LinkPredictor, tasks: &[&Task]) -> Result<()> {
    for task in tasks {
        if let crate::nn::TaskInputs::Pairs { graph, .. } = &task.inputs {
            if graph.features.ncols() != model.input_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "task features have {} columns, model expects {}",
                    graph.features.ncols(),
                    model.input_dim()
                )));
            }
        }
    }
    Ok(())
}

/// Plain full-batch training on one task. `trainable` freezes tensors.
pub fn fit(
    model: &mut LinkPredictor,
    optimizer: &mut Adam,
    task: &Task,
    epochs: usize,
    trainable: Option<&[bool]>,
) -> Result<Vec<f64>> {
    check_dims(model, &[task])?;
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grads) = task.loss_and_grad(model)?;
        checked(loss, &grads, epoch, "train")?;
        optimizer.step_masked(model.params_mut(), &grads, trainable);
        losses.push(loss);
    }
    Ok(losses)
}

pub fn train_clean(model: LinkPredictor, train: &Task, cfg: &TrainConfig) -> Result<Embedded> {
    let mut model = model;
    let mut optimizer = Adam::new(model.params(), cfg.lr);
    let losses = fit(&mut model, &mut optimizer, train, cfg.epochs, None)?;
    let history = losses
        .into_iter()
        .enumerate()
        .map(|(epoch, l)| EpochLoss { epoch, train: Some(l), wm: None })
        .collect();
    Ok(Embedded { model, optimizer, history })
}

/// Per epoch: a step on the training loss, then a step on the watermark loss,
/// both through the same Adam state. An empty trigger set reduces this to
/// plain training.
pub fn embed_genie(model: LinkPredictor, train: &Task, wm: &Task, cfg: &TrainConfig) -> Result<Embedded> {
    let mut model = model;
    check_dims(&model, &[train, wm])?;
    let mut optimizer = Adam::new(model.params(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (lt, gt) = train.loss_and_grad(&model)?;
        checked(lt, &gt, epoch, "train")?;
        optimizer.step(model.params_mut(), &gt);
        let mut lw = None;
        if !wm.is_empty() {
            let (l, gw) = wm.loss_and_grad(&model)?;
            checked(l, &gw, epoch, "watermark")?;
            optimizer.step(model.params_mut(), &gw);
            lw = Some(l);
        }
        history.push(EpochLoss { epoch, train: Some(lt), wm: lw });
    }
    Ok(Embedded { model, optimizer, history })
}

/// Fine-tunes an already trained model on the trigger set alone.
pub fn embed_finetune_baseline(model: LinkPredictor, wm: &Task, epochs: usize, lr: f64) -> Result<Embedded> {
    let mut model = model;
    let mut optimizer = Adam::new(model.params(), lr);
    let losses = fit(&mut model, &mut optimizer, wm, epochs, None)?;
    let history = losses
        .into_iter()
        .enumerate()
        .map(|(epoch, l)| EpochLoss { epoch, train: None, wm: Some(l) })
        .collect();
    Ok(Embedded { model, optimizer, history })
}

/// How the two per-epoch gradients are merged into one update.
fn combined_training(
    model: LinkPredictor,
    train: &Task,
    wm: &Task,
    cfg: &TrainConfig,
    weights: impl Fn(&Params, &Params) -> (f64, f64),
) -> Result<Embedded> {
    let mut model = model;
    check_dims(&model, &[train, wm])?;
    let mut optimizer = Adam::new(model.params(), cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (l1, mut g1) = train.loss_and_grad(&model)?;
        checked(l1, &g1, epoch, "train")?;
        let mut lw = None;
        if !wm.is_empty() {
            let (l2, g2) = wm.loss_and_grad(&model)?;
            checked(l2, &g2, epoch, "watermark")?;
            let (a1, a2) = weights(&g1, &g2);
            g1.scale(a1);
            g1.add_scaled(a2, &g2);
            lw = Some(l2);
        }
        optimizer.step(model.params_mut(), &g1);
        history.push(EpochLoss { epoch, train: Some(l1), wm: lw });
    }
    Ok(Embedded { model, optimizer, history })
}

/// Training set and trigger set treated as one dataset: the loss is the mean
/// over all samples of both.
pub fn embed_poison_baseline(model: LinkPredictor, train: &Task, wm: &Task, cfg: &TrainConfig) -> Result<Embedded> {
    let (n1, n2) = (train.len() as f64, wm.len() as f64);
    combined_training(model, train, wm, cfg, |_, _| (n1 / (n1 + n2), n2 / (n1 + n2)))
}

pub fn embed_uniform_baseline(model: LinkPredictor, train: &Task, wm: &Task, cfg: &TrainConfig) -> Result<Embedded> {
    combined_training(model, train, wm, cfg, |_, _| (1.0, 1.0))
}

pub fn embed_mgda_baseline(model: LinkPredictor, train: &Task, wm: &Task, cfg: &TrainConfig) -> Result<Embedded> {
    combined_training(model, train, wm, cfg, |g1, g2| {
        let a = min_norm_coefficient(g1, g2);
        (a, 1.0 - a)
    })
}

/// Weight `a` on `g1` minimising `‖a·g1 + (1−a)·g2‖` over `a ∈ [0, 1]`;
/// 0.5 when the gradients coincide.
pub fn min_norm_coefficient(g1: &Params, g2: &Params) -> f64 {
    let mut diff = g1.clone();
    diff.add_scaled(-1.0, g2);
    let denom = diff.norm_sq();
    if denom == 0.0 {
        return 0.5;
    }
    let mut neg_diff = diff;
    neg_diff.scale(-1.0);
    (neg_diff.dot(g2) / denom).clamp(0.0, 1.0)
}

/// Runs `cfg.method` from a fresh model. The fine-tuning baseline first
/// trains clean for `cfg.epochs`, then tunes for [`FINETUNE_EPOCHS`].
pub fn embed(train: &Task, wm: &Task, input_dim: usize, cfg: &TrainConfig) -> Result<Embedded> {
    let model = cfg.init_model(input_dim);
    match cfg.method {
        Method::Genie => embed_genie(model, train, wm, cfg),
        Method::Clean => train_clean(model, train, cfg),
        Method::Poison => embed_poison_baseline(model, train, wm, cfg),
        Method::Uniform => embed_uniform_baseline(model, train, wm, cfg),
        Method::Mgda => embed_mgda_baseline(model, train, wm, cfg),
        Method::Finetune => {
            let clean = train_clean(model, train, cfg)?;
            let mut tuned = embed_finetune_baseline(clean.model, wm, FINETUNE_EPOCHS, cfg.lr)?;
            let mut history = clean.history;
            history.extend(tuned.history.iter().map(|h| EpochLoss { epoch: h.epoch + cfg.epochs, ..*h }));
            tuned.history = history;
            Ok(tuned)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use ndarray::array;

    use super::*;
    use crate::graph::{generate_sbm, init_features, split_links, Split, SplitRatios};
    use crate::nn::GraphInput;
    use crate::wm::{gen_node_rep_wm, WatermarkSet};

    fn p(v: &[f64]) -> Params {
        Params(vec![ndarray::Array2::from_shape_vec((1, v.len()), v.to_vec()).unwrap()])
    }

    #[test]
    fn min_norm_cases() {
        assert_eq!(min_norm_coefficient(&p(&[1.0, 2.0]), &p(&[1.0, 2.0])), 0.5);
        assert!((min_norm_coefficient(&p(&[1.0, 0.0]), &p(&[0.0, 1.0])) - 0.5).abs() < 1e-15);
        assert_eq!(min_norm_coefficient(&p(&[1.0, 0.0]), &p(&[3.0, 0.0])), 1.0);
        assert_eq!(min_norm_coefficient(&p(&[3.0, 0.0]), &p(&[1.0, 0.0])), 0.0);
    }

    #[test]
    fn min_norm_matches_grid_search() {
        let g1 = Params(vec![array![[0.3, -1.2], [2.0, 0.5]]]);
        let g2 = Params(vec![array![[-0.7, 0.4], [0.1, 1.5]]]);
        let a = min_norm_coefficient(&g1, &g2);
        let norm = |a: f64| {
            let mut c = g1.clone();
            c.scale(a);
            c.add_scaled(1.0 - a, &g2);
            c.norm_sq()
        };
        let best = (0..=10_000).map(|i| i as f64 / 10_000.0).min_by(|x, y| norm(*x).total_cmp(&norm(*y))).unwrap();
        assert!((a - best).abs() < 1e-3);
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg = TrainConfig::from_json(r#"{"arch":"sage","seed":3,"method":"mgda"}"#).unwrap();
        assert_eq!(cfg.arch, Arch::Sage);
        assert_eq!(cfg.epochs, 400);
        assert_eq!(cfg.hidden, 256);
        assert_eq!(cfg.lr, 1e-3);
        assert_eq!(cfg.method, Method::Mgda);
        assert_eq!(TrainConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
        assert!(TrainConfig::from_json(r#"{"epochs":0}"#).is_err());
        assert!(TrainConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert_eq!("GENIE".parse::<Method>().unwrap(), Method::Genie);
    }

    struct Toy {
        train: Task,
        test: Task,
        wm: Task,
        dim: usize,
    }

    fn toy() -> Toy {
        toy_sized(20, 0.2)
    }

    fn toy_sized(per_block: usize, alpha: f64) -> Toy {
        let g = init_features(generate_sbm(2, per_block, 0.4, 0.02, 1).unwrap(), 8, 2).unwrap();
        let ds = split_links(&g, SplitRatios::default(), 3).unwrap();
        let input = Arc::new(GraphInput::new(ds.mp_adjacency(), ds.features().clone()));
        let wm = gen_node_rep_wm(&ds.train_graph().unwrap(), alpha, 4).unwrap();
        Toy {
            train: Task::from_labeled_pairs(Arc::clone(&input), &ds.split(Split::Train)),
            test: Task::from_labeled_pairs(input, &ds.split(Split::Test)),
            wm: WatermarkSet::NodeRep(wm).task().unwrap(),
            dim: 8,
        }
    }

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig { hidden: 16, epochs, lr: 0.01, seed: 5, ..TrainConfig::default() }
    }

    #[test]
    fn genie_step_count_and_reproducibility() {
        let t = toy();
        let one = embed_genie(cfg(1).init_model(t.dim), &t.train, &t.wm, &cfg(1)).unwrap();
        assert_eq!(one.optimizer.steps(), 2);
        let a = embed_genie(cfg(7).init_model(t.dim), &t.train, &t.wm, &cfg(7)).unwrap();
        let b = embed_genie(cfg(7).init_model(t.dim), &t.train, &t.wm, &cfg(7)).unwrap();
        assert_eq!(a.optimizer.steps(), 14);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn empty_trigger_set_is_plain_training() {
        let t = toy();
        let empty = Task::pairs(Arc::new(GraphInput::new(&crate::graph::Adjacency::empty(1), ndarray::Array2::zeros((1, 8)))), vec![], vec![]);
        let g = embed_genie(cfg(5).init_model(t.dim), &t.train, &empty, &cfg(5)).unwrap();
        let c = train_clean(cfg(5).init_model(t.dim), &t.train, &cfg(5)).unwrap();
        assert_eq!(g.model, c.model);
        assert_eq!(g.optimizer.steps(), 5);
    }

    #[test]
    fn zero_epochs_leave_model_unchanged() {
        let t = toy();
        let c = cfg(0);
        let m = c.init_model(t.dim);
        assert_eq!(embed_poison_baseline(m.clone(), &t.train, &t.wm, &c).unwrap().model, m);
        assert_eq!(embed_uniform_baseline(m.clone(), &t.train, &t.wm, &c).unwrap().model, m);
        assert_eq!(embed_mgda_baseline(m.clone(), &t.train, &t.wm, &c).unwrap().model, m);
        assert_eq!(embed_finetune_baseline(m.clone(), &t.wm, 0, 0.01).unwrap().model, m);
    }

    #[test]
    fn all_methods_beat_chance_on_test() {
        let t = toy_sized(50, 0.1);
        for method in Method::ALL {
            let c = TrainConfig { method, lr: 1e-3, ..cfg(300) };
            let out = embed(&t.train, &t.wm, t.dim, &c).unwrap();
            let auc = t.test.auc(&out.model).unwrap();
            assert!(auc >= 0.5, "{method:?}: test AUC {auc}");
        }
    }

    #[test]
    fn genie_learns_trigger_set() {
        let t = toy();
        let out = embed(&t.train, &t.wm, t.dim, &cfg(150)).unwrap();
        assert!(t.wm.auc(&out.model).unwrap() >= 0.9);
    }
}
