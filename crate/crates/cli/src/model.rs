use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use lpwm_core::embed::{embed, EpochLoss, Method, TrainConfig};
use lpwm_core::nn::{checkpoint, Arch};
use lpwm_core::stats::{self, dwt_threshold, shapiro_wilk, smoothed_bootstrap_test, AucSamples};
use lpwm_core::{rng, LinkDataset, LinkPredictor, Split, WatermarkSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::ctx::{Ctx, Tasks};

#[derive(Args, Debug)]
pub struct TrainFlags {
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

impl TrainFlags {
    pub fn apply(&self, cfg: &mut RunConfig) -> anyhow::Result<()> {
        let t = &mut cfg.train;
        t.method = self.method.unwrap_or(t.method);
        t.epochs = self.epochs.unwrap_or(t.epochs);
        t.hidden = self.hidden.unwrap_or(t.hidden);
        t.lr = self.lr.unwrap_or(t.lr);
        if let Some(a) = &self.arch {
            t.arch = parse_arch(a)?;
        }
        Ok(())
    }
}

pub fn parse_arch(s: &str) -> anyhow::Result<Arch> {
    match s.to_ascii_lowercase().as_str() {
        "gcn" => Ok(Arch::Gcn),
        "sage" | "graphsage" => Ok(Arch::Sage),
        _ => anyhow::bail!("unknown architecture {s:?}; expected gcn or sage"),
    }
}

/// Sidecar written next to every checkpoint.
#[derive(Serialize, Deserialize)]
pub struct TrainReport {
    pub method: Method,
    pub config: TrainConfig,
    pub wm_hash: Option<String>,
    pub history: Vec<EpochLoss>,
}

/// Trains one model with `cfg`; an empty trigger task stands in when no
/// watermark is given.
pub fn train_one(ds: &LinkDataset, wm: Option<&WatermarkSet>, tasks: &Tasks<'_>, cfg: &TrainConfig) -> anyhow::Result<lpwm_core::embed::Embedded> {
    if wm.is_none() && cfg.method != Method::Clean {
        anyhow::bail!("method {} needs --wm", cfg.method.name());
    }
    let train = tasks.split(Split::Train)?;
    let wm_task = match wm {
        Some(w) => w.task()?,
        None => train_empty(&train),
    };
    Ok(embed(&train, &wm_task, ds.features().ncols(), cfg)?)
}

fn train_empty(train: &lpwm_core::Task) -> lpwm_core::Task {
    let mut empty = train.clone();
    match &mut empty.inputs {
        lpwm_core::nn::TaskInputs::Pairs { pairs, .. } => pairs.clear(),
        lpwm_core::nn::TaskInputs::Subgraphs(s) => s.clear(),
    }
    empty.labels.clear();
    empty.targets = ndarray::Array2::zeros((0, 2));
    empty
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub wm: Option<PathBuf>,
    #[command(flatten)]
    pub flags: TrainFlags,
}

pub fn train(mut ctx: Ctx, args: &TrainArgs) -> anyhow::Result<()> {
    let ds = ctx.dataset(&args.dataset)?;
    let wm = args.wm.as_deref().map(|p| ctx.watermark(p)).transpose()?;
    let tasks = Tasks::new(&ds, ctx.pathway(wm.as_ref()));
    let cfg = TrainConfig { seed: ctx.seed, ..ctx.cfg.train.clone() };
    let out = train_one(&ds, wm.as_ref(), &tasks, &cfg)?;
    ctx.write("model.ckpt", checkpoint::to_bytes(&out.model))?;
    let report = TrainReport { method: cfg.method, config: cfg, wm_hash: wm.as_ref().map(WatermarkSet::hash_hex), history: out.history };
    ctx.write_json("train.json", &report)?;
    ctx.finish()
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct EvalReport {
    pub dataset: String,
    pub method: Option<Method>,
    pub auc_test: f64,
    pub auc_valid: Option<f64>,
    pub auc_wm: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub wm: Option<PathBuf>,
    /// Row label in reports; defaults to the dataset file stem.
    #[arg(long)]
    pub name: Option<String>,
}

fn sidecar_method(model: &Path) -> Option<Method> {
    let text = std::fs::read_to_string(model.with_file_name("train.json")).ok()?;
    serde_json::from_str::<TrainReport>(&text).ok().map(|r| r.method)
}

pub fn dataset_name(path: &Path, name: Option<&str>) -> String {
    name.map(str::to_owned).unwrap_or_else(|| path.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned()))
}

fn auc_or_none(task: &lpwm_core::Task, model: &LinkPredictor) -> anyhow::Result<Option<f64>> {
    match task.auc(model) {
        Ok(a) => Ok(Some(a)),
        Err(lpwm_core::Error::SingleClass) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn eval(mut ctx: Ctx, args: &EvalArgs) -> anyhow::Result<()> {
    let ds = ctx.dataset(&args.dataset)?;
    let model = ctx.model(&args.model)?;
    let wm = args.wm.as_deref().map(|p| ctx.watermark(p)).transpose()?;
    let tasks = Tasks::new(&ds, ctx.pathway(wm.as_ref()));
    let report = EvalReport {
        dataset: dataset_name(&args.dataset, args.name.as_deref()),
        method: sidecar_method(&args.model),
        auc_test: tasks.split(Split::Test)?.auc(&model)?,
        auc_valid: auc_or_none(&tasks.split(Split::Valid)?, &model)?,
        auc_wm: wm.as_ref().map(|w| w.task()?.auc(&model)).transpose()?,
    };
    ctx.write_json("eval.json", &report)?;
    println!("{}", serde_json::to_string(&report)?);
    ctx.finish()
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub wm: PathBuf,
    /// Models per side.
    #[arg(long)]
    pub models: Option<usize>,
    #[command(flatten)]
    pub flags: TrainFlags,
}

/// AUCs on the trigger set of `models` clean and `models` watermarked
/// models, seeds derived per index. Trainings run on the worker pool.
pub fn auc_samples(ds: &LinkDataset, wm: &WatermarkSet, tasks: &Tasks<'_>, cfg: &RunConfig, seed: u64) -> anyhow::Result<AucSamples> {
    let method = if cfg.train.method == Method::Clean { Method::Genie } else { cfg.train.method };
    let wm_task = wm.task()?;
    let jobs: Vec<(bool, u64)> = (0..cfg.dwt.models as u64).flat_map(|i| [(false, i), (true, i)]).collect();
    let aucs = jobs
        .par_iter()
        .map(|&(marked, i)| {
            let label = if marked { "threshold-wm" } else { "threshold-clean" };
            let tc = TrainConfig {
                seed: rng::derive_indexed(seed, label, i),
                method: if marked { method } else { Method::Clean },
                ..cfg.train.clone()
            };
            let m = train_one(ds, Some(wm), tasks, &tc)?.model;
            Ok(wm_task.auc(&m)?)
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    let (clean, marked): (Vec<_>, Vec<_>) = jobs.iter().zip(aucs).partition(|((m, _), _)| !*m);
    Ok(AucSamples::new(clean.into_iter().map(|x| x.1).collect(), marked.into_iter().map(|x| x.1).collect()))
}

fn sample_setup(ctx: &mut Ctx, args: &SampleArgs) -> anyhow::Result<(LinkDataset, WatermarkSet)> {
    if let Some(m) = args.models {
        ctx.cfg.dwt.models = m;
        ctx.cfg.validate()?;
    }
    Ok((ctx.dataset(&args.dataset)?, ctx.watermark(&args.wm)?))
}

pub fn threshold_models(mut ctx: Ctx, args: &SampleArgs) -> anyhow::Result<()> {
    let (ds, wm) = sample_setup(&mut ctx, args)?;
    let tasks = Tasks::new(&ds, ctx.pathway(Some(&wm)));
    let s = auc_samples(&ds, &wm, &tasks, &ctx.cfg, ctx.seed)?;
    ctx.write("clean_aucs.csv", stats::write_auc_list(&s.clean))?;
    ctx.write("wm_aucs.csv", stats::write_auc_list(&s.watermarked))?;
    println!("{}", json!({"clean": s.clean, "watermarked": s.watermarked}));
    ctx.finish()
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub clean_aucs: PathBuf,
    #[arg(long)]
    pub wm_aucs: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl ThresholdArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        cfg.dwt.n = self.n.unwrap_or(cfg.dwt.n);
        cfg.dwt.gamma = self.gamma.unwrap_or(cfg.dwt.gamma);
    }
}

pub fn load_samples(ctx: &mut Ctx, clean: &Path, wm: &Path) -> anyhow::Result<AucSamples> {
    let c = stats::parse_auc_list(&ctx.read_text(clean)?).with_context(|| format!("parsing {}", clean.display()))?;
    let w = stats::parse_auc_list(&ctx.read_text(wm)?).with_context(|| format!("parsing {}", wm.display()))?;
    Ok(AucSamples::new(c, w))
}

pub fn threshold(mut ctx: Ctx, args: &ThresholdArgs) -> anyhow::Result<()> {
    let s = load_samples(&mut ctx, &args.clean_aucs, &args.wm_aucs)?;
    let report = dwt_threshold(&s.clean, &s.watermarked, ctx.cfg.dwt.n, ctx.cfg.dwt.gamma, ctx.seed)?;
    ctx.write("threshold.json", report.to_json()? + "\n")?;
    println!("{}", serde_json::to_string(&report)?);
    ctx.finish()
}

#[derive(Serialize)]
struct Table1 {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    shapiro_beta: (f64, f64),
    shapiro_alpha: (f64, f64),
    bootstrap_p: f64,
    reject_h0: bool,
}

const BOOTSTRAP_REPLICATES: usize = 100_000;

/// Clean (β) and watermarked (α) trigger-set AUC rows with the normality and
/// bootstrap tests.
pub fn reproduce_table1(mut ctx: Ctx, args: &SampleArgs) -> anyhow::Result<()> {
    let (ds, wm) = sample_setup(&mut ctx, args)?;
    let tasks = Tasks::new(&ds, ctx.pathway(Some(&wm)));
    let s = auc_samples(&ds, &wm, &tasks, &ctx.cfg, ctx.seed)?;
    let p = smoothed_bootstrap_test(&s, BOOTSTRAP_REPLICATES, rng::derive_seed(ctx.seed, "table1-bootstrap"))?;
    let table = Table1 {
        shapiro_beta: shapiro_wilk(&s.clean)?,
        shapiro_alpha: shapiro_wilk(&s.watermarked)?,
        beta: s.clean,
        alpha: s.watermarked,
        bootstrap_p: p,
        reject_h0: p < 0.05,
    };
    let cells = |row: &[f64]| row.iter().map(|v| format!("{:.2}", 100.0 * v)).collect::<Vec<_>>().join(",");
    let header: Vec<String> = (1..=table.beta.len()).map(|i| format!("i={i}")).collect();
    let csv = format!(
        "score,{},shapiro_w,shapiro_p\nbeta,{},{:.4},{:.4}\nalpha,{},{:.4},{:.4}\n",
        header.join(","),
        cells(&table.beta),
        table.shapiro_beta.0,
        table.shapiro_beta.1,
        cells(&table.alpha),
        table.shapiro_alpha.0,
        table.shapiro_alpha.1,
    );
    ctx.write("table1.csv", &csv)?;
    ctx.write_json("table1.json", &table)?;
    print!("{csv}");
    println!("bootstrap p = {:.6}", table.bootstrap_p);
    if table.reject_h0 {
        println!("reject H0 at 0.05: watermarked trigger-set AUCs exceed clean ones");
    } else {
        println!("cannot reject H0 at 0.05");
    }
    ctx.finish()
}
