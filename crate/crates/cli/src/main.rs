//! `lpwm`: watermark a GNN link predictor, attack it, and settle disputes.

mod attack;
mod config;
mod ctx;
mod data;
mod judge;
mod model;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::ctx::Ctx;

const JOBS_ENV: &str = "GENIE_LPWM_JOBS";

#[derive(Parser, Debug)]
#[command(name = "lpwm", version, about = "Backdoor watermarking for GNN link predictors")]
struct Cli {
    /// Run configuration JSON; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; falls back to $GENIE_LPWM_JOBS, then the core count.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a stochastic-block-model graph with random features.
    Datagen(data::DatagenArgs),
    /// Split a graph's edges into train/valid/test with sampled negatives.
    Split(data::SplitArgs),
    /// Build a trigger set for a dataset.
    WmGen(data::WmArgs),
    /// Train a model, watermarked or clean.
    Train(model::TrainArgs),
    /// Test and trigger-set AUC of a checkpoint.
    Eval(model::EvalArgs),
    /// Train clean and watermarked models and record their trigger-set AUCs.
    ThresholdModels(model::SampleArgs),
    /// Derive the ownership threshold from two AUC samples.
    Threshold(model::ThresholdArgs),
    /// Run removal attacks against a watermarked checkpoint.
    Attack(attack::AttackArgs),
    /// Judge-side trigger generation plus a bulletin-board entry.
    Register(data::RegisterArgs),
    /// Resolve an ownership claim against the board.
    Dispute(judge::DisputeArgs),
    /// Answer `u v` link queries on stdin.
    Serve(judge::ServeArgs),
    /// Render a results table from eval reports.
    Report(report::ReportArgs),
    /// Trigger-set AUCs of clean and watermarked models with normality and bootstrap tests.
    ReproduceTable1(model::SampleArgs),
}

fn jobs(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(JOBS_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().map_err(|_| anyhow::anyhow!("{JOBS_ENV}={v:?} is not a thread count"))?)),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = jobs(cli.jobs)? {
        if n == 0 {
            anyhow::bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let (seed, out) = (cli.seed, cli.out);
    let ctx = |name, cfg| Ctx::new(name, cfg, seed, out.clone());
    match &cli.command {
        Command::Datagen(a) => {
            a.apply(&mut cfg);
            data::datagen(ctx("datagen", cfg)?)
        }
        Command::Split(a) => data::split(ctx("split", cfg)?, a),
        Command::WmGen(a) => {
            a.apply(&mut cfg)?;
            data::wm_gen(ctx("wm-gen", cfg)?, a)
        }
        Command::Train(a) => {
            a.flags.apply(&mut cfg)?;
            model::train(ctx("train", cfg)?, a)
        }
        Command::Eval(a) => model::eval(ctx("eval", cfg)?, a),
        Command::ThresholdModels(a) => {
            a.flags.apply(&mut cfg)?;
            model::threshold_models(ctx("threshold-models", cfg)?, a)
        }
        Command::Threshold(a) => {
            a.apply(&mut cfg);
            model::threshold(ctx("threshold", cfg)?, a)
        }
        Command::Attack(a) => attack::attack(ctx("attack", cfg)?, a),
        Command::Register(a) => {
            a.wm.apply(&mut cfg)?;
            data::register(ctx("register", cfg)?, a)
        }
        Command::Dispute(a) => {
            a.dwt.apply(&mut cfg);
            judge::dispute(ctx("dispute", cfg)?, a)
        }
        Command::Serve(a) => judge::serve(ctx("serve", cfg)?, a),
        Command::Report(a) => report::report(ctx("report", cfg)?, a),
        Command::ReproduceTable1(a) => {
            a.flags.apply(&mut cfg)?;
            model::reproduce_table1(ctx("reproduce-table1", cfg)?, a)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().skip(1).map(ToString::to_string).collect();
            let err = serde_json::json!({"error": e.to_string(), "causes": chain});
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}
