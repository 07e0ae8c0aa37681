//! Per-command state: resolved config, seed, output directory and the run
//! manifest being accumulated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use lpwm_core::nn::{checkpoint, GraphInput, Pathway};
use lpwm_core::wm::hash_bytes;
use lpwm_core::{LinkDataset, LinkPredictor, Split, Task, WatermarkSet};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    seed: u64,
    config_hash: String,
    config: &'a RunConfig,
    inputs: &'a BTreeMap<String, String>,
    artifacts: &'a BTreeMap<String, String>,
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
    command: &'static str,
    inputs: BTreeMap<String, String>,
    artifacts: BTreeMap<String, String>,
}

impl Ctx {
    pub fn new(command: &'static str, cfg: RunConfig, seed: u64, out: PathBuf) -> anyhow::Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Ctx { cfg, seed, out, command, inputs: BTreeMap::new(), artifacts: BTreeMap::new() })
    }

    /// Reads an input file and records its hash.
    pub fn read(&mut self, path: &Path) -> anyhow::Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), hash_bytes(&bytes));
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> anyhow::Result<String> {
        String::from_utf8(self.read(path)?).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// Writes `name` under the output directory and records its hash.
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> anyhow::Result<PathBuf> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(&path, bytes.as_ref()).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.insert(name.to_owned(), hash_bytes(bytes.as_ref()));
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(self) -> anyhow::Result<()> {
        let manifest = Manifest {
            command: self.command,
            argv: std::env::args().collect(),
            seed: self.seed,
            config_hash: self.cfg.hash(),
            config: &self.cfg,
            inputs: &self.inputs,
            artifacts: &self.artifacts,
        };
        let path = self.out.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn dataset(&mut self, path: &Path) -> anyhow::Result<LinkDataset> {
        let text = self.read_text(path)?;
        LinkDataset::from_json(&text).with_context(|| format!("loading dataset {}", path.display()))
    }

    pub fn watermark(&mut self, path: &Path) -> anyhow::Result<WatermarkSet> {
        let bytes = self.read(path)?;
        WatermarkSet::from_bytes(&bytes).with_context(|| format!("loading watermark {}", path.display()))
    }

    pub fn model(&mut self, path: &Path) -> anyhow::Result<LinkPredictor> {
        let bytes = self.read(path)?;
        checkpoint::from_bytes(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))
    }

    /// The pathway implied by a trigger set, or the configured one.
    pub fn pathway(&self, wm: Option<&WatermarkSet>) -> Pathway {
        match wm {
            Some(WatermarkSet::NodeRep(_)) => Pathway::NodeRep,
            Some(WatermarkSet::Subgraph(_)) => Pathway::Subgraph { hops: self.cfg.wm.hops },
            None => self.cfg.wm.pathway,
        }
    }
}

/// Tasks of one dataset on one pathway, sharing the message-passing input.
pub struct Tasks<'a> {
    ds: &'a LinkDataset,
    pathway: Pathway,
    input: Arc<GraphInput>,
}

impl<'a> Tasks<'a> {
    pub fn new(ds: &'a LinkDataset, pathway: Pathway) -> Self {
        let input = Arc::new(GraphInput::new(ds.mp_adjacency(), ds.features().clone()));
        Tasks { ds, pathway, input }
    }

    pub fn split(&self, split: Split) -> anyhow::Result<Task> {
        self.pairs(&self.ds.split(split))
    }

    pub fn pairs(&self, pairs: &[lpwm_core::graph::LabeledPair]) -> anyhow::Result<Task> {
        Ok(self.pathway.task(self.ds, &self.input, pairs)?)
    }
}
