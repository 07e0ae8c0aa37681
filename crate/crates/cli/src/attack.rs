use std::path::PathBuf;
use std::str::FromStr;

use anyhow::Context;
use clap::Args;
use lpwm_core::attacks::{
    attacker_split, distill, extract, fine_prune, finetune, prune, quantize, AttackReport, FinetuneMode, LabelMode, SurrogateConfig,
};
use lpwm_core::{rng, LinkPredictor, Task, ThresholdReport};
use rayon::prelude::*;

use crate::config::AttackConfig;
use crate::ctx::{Ctx, Tasks};

/// One cell of the attack matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AttackKind {
    Finetune(FinetuneMode),
    Prune(f64),
    Quantize(u32),
    FinePrune(f64),
    ExtractSoft,
    ExtractHard,
    ExtractDouble,
    Distill(f64),
}

impl AttackKind {
    pub fn label(&self) -> String {
        match self {
            AttackKind::Finetune(m) => m.name().to_owned(),
            AttackKind::Prune(f) => format!("prune:{f}"),
            AttackKind::Quantize(b) => format!("quantize:{b}"),
            AttackKind::FinePrune(f) => format!("fine-prune:{f}"),
            AttackKind::ExtractSoft => "extract-soft".into(),
            AttackKind::ExtractHard => "extract-hard".into(),
            AttackKind::ExtractDouble => "extract-double".into(),
            AttackKind::Distill(l) => format!("distill:{l}"),
        }
    }

    pub fn matrix(cfg: &AttackConfig) -> Vec<AttackKind> {
        let mut kinds: Vec<AttackKind> = FinetuneMode::ALL.into_iter().map(AttackKind::Finetune).collect();
        kinds.extend(cfg.prune_fractions.iter().map(|&f| AttackKind::Prune(f)));
        kinds.extend(cfg.quantize_bits.iter().map(|&b| AttackKind::Quantize(b)));
        kinds.push(AttackKind::FinePrune(cfg.fine_prune_fraction));
        kinds.extend([AttackKind::ExtractSoft, AttackKind::ExtractHard, AttackKind::ExtractDouble]);
        kinds.push(AttackKind::Distill(cfg.distill_lambda));
        kinds
    }
}

impl FromStr for AttackKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (name, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        let num = || -> anyhow::Result<f64> {
            arg.with_context(|| format!("{name} needs a parameter, e.g. {name}:0.4"))?.parse::<f64>().with_context(|| format!("bad parameter in {s:?}"))
        };
        Ok(match name.to_ascii_lowercase().as_str() {
            "prune" => AttackKind::Prune(num()?),
            "quantize" => AttackKind::Quantize(num()? as u32),
            "fine-prune" => AttackKind::FinePrune(num()?),
            "extract-soft" => AttackKind::ExtractSoft,
            "extract-hard" => AttackKind::ExtractHard,
            "extract-double" => AttackKind::ExtractDouble,
            "distill" => AttackKind::Distill(num()?),
            other => AttackKind::Finetune(other.parse().map_err(|_| anyhow::anyhow!("unknown attack {s:?}"))?),
        })
    }
}

pub struct Battery<'a> {
    pub victim: &'a LinkPredictor,
    pub query: &'a Task,
    pub cfg: &'a AttackConfig,
    pub seed: u64,
}

impl Battery<'_> {
    fn surrogate(&self) -> SurrogateConfig {
        SurrogateConfig { arch: self.victim.arch(), hidden: self.cfg.surrogate_hidden, epochs: self.cfg.surrogate_epochs, lr: self.cfg.lr }
    }

    pub fn run(&self, kind: AttackKind) -> anyhow::Result<LinkPredictor> {
        let (v, q, c) = (self.victim, self.query, self.cfg);
        let seed = rng::derive_seed(self.seed, &kind.label());
        Ok(match kind {
            AttackKind::Finetune(mode) => finetune(v, q, mode, c.epochs, c.lr, seed)?,
            AttackKind::Prune(f) => prune(v, f)?,
            AttackKind::Quantize(b) => quantize(v, b)?,
            AttackKind::FinePrune(f) => fine_prune(v, f, FinetuneMode::Ftal, q, c.epochs, c.lr, seed)?,
            AttackKind::ExtractSoft => extract(v, q, &self.surrogate(), LabelMode::Soft, 1, seed)?,
            AttackKind::ExtractHard => extract(v, q, &self.surrogate(), LabelMode::Hard, 1, seed)?,
            AttackKind::ExtractDouble => extract(v, q, &self.surrogate(), LabelMode::Hard, 2, seed)?,
            AttackKind::Distill(l) => distill(v, q, &self.surrogate(), l, seed)?,
        })
    }
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub wm: PathBuf,
    /// A threshold.json from `threshold`, or a bare number.
    #[arg(long)]
    pub threshold: String,
    /// Comma-separated attack labels, e.g. `FTLL,prune:0.4,quantize:3`. Defaults to the full matrix.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Vec<AttackKind>,
    #[arg(long)]
    pub name: Option<String>,
}

fn read_threshold(ctx: &mut Ctx, arg: &str) -> anyhow::Result<f64> {
    if let Ok(t) = arg.parse::<f64>() {
        return Ok(t);
    }
    let text = ctx.read_text(std::path::Path::new(arg))?;
    Ok(ThresholdReport::from_json(&text).with_context(|| format!("parsing {arg}"))?.t)
}

pub fn attack(mut ctx: Ctx, args: &AttackArgs) -> anyhow::Result<()> {
    let ds = ctx.dataset(&args.dataset)?;
    let victim = ctx.model(&args.model)?;
    let wm = ctx.watermark(&args.wm)?;
    let t = read_threshold(&mut ctx, &args.threshold)?;
    let tasks = Tasks::new(&ds, ctx.pathway(Some(&wm)));
    let data = attacker_split(&ds, ctx.seed);
    let (query, eval) = (tasks.pairs(&data.query)?, tasks.pairs(&data.eval)?);
    let wm_task = wm.task()?;
    let kinds = if args.kinds.is_empty() { AttackKind::matrix(&ctx.cfg.attack) } else { args.kinds.clone() };
    let battery = Battery { victim: &victim, query: &query, cfg: &ctx.cfg.attack, seed: ctx.seed };
    let reports = kinds
        .par_iter()
        .map(|&k| {
            let after = battery.run(k)?;
            Ok(AttackReport::measure(k.label(), &victim, &after, &eval, &wm_task, t)?)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let name = crate::model::dataset_name(&args.dataset, args.name.as_deref());
    for r in &reports {
        ctx.write_json(&format!("attacks/{}.json", r.kind.replace(':', "_")), r)?;
    }
    let labels: Vec<&str> = reports.iter().map(|r| r.kind.as_str()).collect();
    let row = |metric: &str, f: &dyn Fn(&AttackReport) -> f64| {
        let cells: Vec<String> = reports.iter().map(|r| format!("{:.2}", 100.0 * f(r))).collect();
        format!("{name},{metric},{}\n", cells.join(","))
    };
    let mut csv = format!("dataset,metric,{}\n", labels.join(","));
    csv += &row("auc_test", &|r| r.auc_test_post);
    csv += &row("auc_wm", &|r| r.auc_wm_post);
    let verdicts: Vec<String> = reports.iter().map(|r| serde_json::to_value(r.verdict).unwrap().as_str().unwrap_or("").to_owned()).collect();
    csv += &format!("{name},verdict,{}\n", verdicts.join(","));
    ctx.write("attacks.csv", &csv)?;
    print!("{csv}");
    ctx.finish()
}
