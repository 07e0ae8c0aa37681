//! Run configuration: one JSON document, every section optional.

use std::path::Path;

use anyhow::{bail, Context};
use lpwm_core::embed::TrainConfig;
use lpwm_core::nn::Pathway;
use lpwm_core::SplitRatios;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub blocks: usize,
    pub per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { blocks: 2, per_block: 100, p_in: 0.25, p_out: 0.02, feature_dim: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WmConfig {
    pub pathway: Pathway,
    pub alpha: f64,
    /// Hop count used for the subgraph pathway when a trigger file does not say.
    pub hops: usize,
}

impl Default for WmConfig {
    fn default() -> Self {
        WmConfig { pathway: Pathway::NodeRep, alpha: 0.1, hops: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub epochs: usize,
    pub lr: f64,
    pub prune_fractions: Vec<f64>,
    pub quantize_bits: Vec<u32>,
    pub fine_prune_fraction: f64,
    pub distill_lambda: f64,
    pub surrogate_hidden: usize,
    pub surrogate_epochs: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            epochs: lpwm_core::attacks::ATTACK_EPOCHS,
            lr: 1e-3,
            prune_fractions: vec![0.2, 0.4, 0.6, 0.8],
            quantize_bits: vec![8, 4, 3, 2],
            fine_prune_fraction: 0.4,
            distill_lambda: 0.5,
            surrogate_hidden: 64,
            surrogate_epochs: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwtConfig {
    pub n: usize,
    pub gamma: f64,
    /// Clean and watermarked models trained per side for the AUC samples.
    pub models: usize,
}

impl Default for DwtConfig {
    fn default() -> Self {
        DwtConfig { n: 1000, gamma: 0.9999, models: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub graph: GraphConfig,
    pub split: SplitRatios,
    pub train: TrainConfig,
    pub wm: WmConfig,
    pub attack: AttackConfig,
    pub dwt: DwtConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        Ok(cfg)
    }

    /// Checked after command-line overrides are applied and before any work.
    pub fn validate(&self) -> anyhow::Result<()> {
        let g = &self.graph;
        if g.blocks == 0 || g.per_block == 0 || g.feature_dim == 0 {
            bail!("graph.blocks, graph.per_block and graph.feature_dim must be positive");
        }
        for (name, p) in [("p_in", g.p_in), ("p_out", g.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                bail!("graph.{name} = {p} is not a probability");
            }
        }
        self.train.validate()?;
        if !(self.wm.alpha > 0.0 && self.wm.alpha < 1.0) {
            bail!("wm.alpha = {} must lie in (0, 1)", self.wm.alpha);
        }
        let a = &self.attack;
        if !(a.lr > 0.0) || a.surrogate_hidden == 0 || a.surrogate_epochs == 0 {
            bail!("attack.lr, attack.surrogate_hidden and attack.surrogate_epochs must be positive");
        }
        if !(0.0..=1.0).contains(&a.distill_lambda) || !(0.0..=1.0).contains(&a.fine_prune_fraction) {
            bail!("attack.distill_lambda and attack.fine_prune_fraction must lie in [0, 1]");
        }
        if self.dwt.n == 0 || self.dwt.models < lpwm_core::stats::MIN_SAMPLES {
            bail!("dwt.n must be positive and dwt.models at least {}", lpwm_core::stats::MIN_SAMPLES);
        }
        lpwm_core::stats::confidence_blocks(self.dwt.gamma)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        lpwm_core::wm::hash_bytes(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}
