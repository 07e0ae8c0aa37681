use std::path::PathBuf;

use clap::Args;
use lpwm_core::nn::GraphInput;
use lpwm_core::protocol::{dispute as resolve, BulletinBoard, Claim, ModelScorer, Server};
use lpwm_core::WatermarkSet;

use crate::ctx::Ctx;
use crate::model::{load_samples, ThresholdArgs};

#[derive(Args, Debug)]
pub struct DisputeArgs {
    #[arg(long)]
    pub board: PathBuf,
    /// Registrant id the plaintiff claims on the board.
    #[arg(long)]
    pub who: String,
    #[arg(long)]
    pub wm: PathBuf,
    /// Suspect model checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub dwt: ThresholdArgs,
}

/// Writes the verdict JSON; the exit code is 0 whoever wins.
pub fn dispute(mut ctx: Ctx, args: &DisputeArgs) -> anyhow::Result<()> {
    let wm_bytes = ctx.read(&args.wm)?;
    let checkpoint_bytes = ctx.read(&args.model)?;
    let samples = load_samples(&mut ctx, &args.dwt.clean_aucs, &args.dwt.wm_aucs)?;
    let board = BulletinBoard::new(&args.board);
    let claim = Claim {
        plaintiff: &args.who,
        wm_bytes: &wm_bytes,
        checkpoint_bytes: &checkpoint_bytes,
        samples: &samples,
        gamma: ctx.cfg.dwt.gamma,
        n: ctx.cfg.dwt.n,
        seed: ctx.seed,
    };
    let verdict = resolve(&board, &claim)?;
    ctx.write_json("verdict.json", &verdict)?;
    println!("{}", serde_json::to_string(&verdict)?);
    ctx.finish()
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Node-rep trigger set whose internal pairs get inverted answers.
    #[arg(long)]
    pub defense: Option<PathBuf>,
}

/// Line protocol on stdin/stdout. No artifacts, so no manifest.
pub fn serve(mut ctx: Ctx, args: &ServeArgs) -> anyhow::Result<()> {
    let ds = ctx.dataset(&args.dataset)?;
    let model = ctx.model(&args.model)?;
    let defense = match args.defense.as_deref().map(|p| ctx.watermark(p)).transpose()? {
        None => None,
        Some(WatermarkSet::NodeRep(w)) => Some(w),
        Some(WatermarkSet::Subgraph(_)) => anyhow::bail!("the serving defense needs a node-rep trigger set"),
    };
    let input = GraphInput::new(ds.mp_adjacency(), ds.features().clone());
    let server = Server::new(ModelScorer::new(model, &input)?, defense.as_ref());
    let stdin = std::io::stdin().lock();
    server.serve_lines(stdin, std::io::stdout().lock())?;
    Ok(())
}
