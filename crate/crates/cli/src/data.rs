use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use lpwm_core::graph::{generate_sbm, init_features, load_edge_list, load_features, split_links, write_edge_list, write_features};
use lpwm_core::nn::Pathway;
use lpwm_core::protocol::{self, BulletinBoard};
use lpwm_core::{wm, WatermarkSet, WmParams};
use serde_json::json;

use crate::ctx::Ctx;

#[derive(Args, Debug)]
pub struct DatagenArgs {
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub per_block: Option<usize>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
}

impl DatagenArgs {
    pub fn apply(&self, cfg: &mut crate::config::RunConfig) {
        let g = &mut cfg.graph;
        g.blocks = self.blocks.unwrap_or(g.blocks);
        g.per_block = self.per_block.unwrap_or(g.per_block);
        g.p_in = self.p_in.unwrap_or(g.p_in);
        g.p_out = self.p_out.unwrap_or(g.p_out);
        g.feature_dim = self.feature_dim.unwrap_or(g.feature_dim);
    }
}

/// Seeded SBM graph with uniform random features.
pub fn datagen(mut ctx: Ctx) -> anyhow::Result<()> {
    let g = &ctx.cfg.graph;
    let graph = generate_sbm(g.blocks, g.per_block, g.p_in, g.p_out, ctx.seed)?;
    let graph = init_features(graph, g.feature_dim, lpwm_core::rng::derive_seed(ctx.seed, "features"))?;
    ctx.write("graph.edges", write_edge_list(&graph))?;
    ctx.write("graph.features", write_features(graph.features()))?;
    println!("{}", json!({"nodes": graph.num_nodes(), "edges": graph.num_edges(), "feature_dim": graph.feature_dim()}));
    ctx.finish()
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub edges: PathBuf,
    /// Without this, features are drawn at `graph.feature_dim`.
    #[arg(long)]
    pub features: Option<PathBuf>,
}

pub fn split(mut ctx: Ctx, args: &SplitArgs) -> anyhow::Result<()> {
    ctx.read(&args.edges)?;
    let graph = load_edge_list(&args.edges).with_context(|| format!("loading {}", args.edges.display()))?;
    let graph = match &args.features {
        Some(p) => {
            ctx.read(p)?;
            let x = load_features(p, graph.num_nodes())?;
            graph.with_features(x)?
        }
        None => init_features(graph, ctx.cfg.graph.feature_dim, lpwm_core::rng::derive_seed(ctx.seed, "features"))?,
    };
    let ds = split_links(&graph, ctx.cfg.split, ctx.seed)?;
    ctx.write("dataset.json", ds.to_json()?)?;
    let count = |s| ds.split(s).len();
    use lpwm_core::Split::*;
    println!("{}", json!({"train": count(Train), "valid": count(Valid), "test": count(Test)}));
    ctx.finish()
}

#[derive(Args, Debug)]
pub struct WmArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `node_rep` or `subgraph`.
    #[arg(long)]
    pub pathway: Option<String>,
    #[arg(long)]
    pub hops: Option<usize>,
}

impl WmArgs {
    pub fn apply(&self, cfg: &mut crate::config::RunConfig) -> anyhow::Result<()> {
        cfg.wm.alpha = self.alpha.unwrap_or(cfg.wm.alpha);
        cfg.wm.hops = self.hops.unwrap_or(cfg.wm.hops);
        match self.pathway.as_deref() {
            None => {}
            Some("node_rep" | "node-rep") => cfg.wm.pathway = Pathway::NodeRep,
            Some("subgraph") => cfg.wm.pathway = Pathway::Subgraph { hops: cfg.wm.hops },
            Some(other) => anyhow::bail!("unknown pathway {other:?}; expected node_rep or subgraph"),
        }
        if let Pathway::Subgraph { hops } = &mut cfg.wm.pathway {
            *hops = cfg.wm.hops;
        }
        Ok(())
    }
}

fn params(ctx: &Ctx) -> WmParams {
    WmParams { pathway: ctx.cfg.wm.pathway, alpha: ctx.cfg.wm.alpha, seed: ctx.seed }
}

fn summary(set: &WatermarkSet) -> serde_json::Value {
    json!({"kind": set.kind(), "size": set.len(), "hash": set.hash_hex()})
}

pub fn wm_gen(mut ctx: Ctx, args: &WmArgs) -> anyhow::Result<()> {
    let ds = ctx.dataset(&args.dataset)?;
    let set = wm::generate(&ds, &params(&ctx))?;
    ctx.write("wm.gwm", set.to_bytes())?;
    let info = summary(&set);
    ctx.write_json("wm.json", &info)?;
    println!("{info}");
    ctx.finish()
}

#[derive(Args, Debug)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub wm: WmArgs,
    #[arg(long)]
    pub board: PathBuf,
    #[arg(long)]
    pub who: String,
}

/// Judge-side trigger generation plus a board entry for its hash.
pub fn register(mut ctx: Ctx, args: &RegisterArgs) -> anyhow::Result<()> {
    let ds = ctx.dataset(&args.wm.dataset)?;
    let board = BulletinBoard::new(&args.board);
    let (set, rec) = protocol::register(&ds, &params(&ctx), &board, &args.who)?;
    ctx.write("wm.gwm", set.to_bytes())?;
    let info = json!({"record": rec, "watermark": summary(&set)});
    ctx.write_json("registration.json", &info)?;
    println!("{info}");
    ctx.finish()
}
