use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use lpwm_core::embed::Method;
use lpwm_core::stats::{mean, std_dev};

use crate::ctx::Ctx;
use crate::model::EvalReport;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Table {
    /// Clean test AUC, watermarked test AUC, watermarked trigger-set AUC.
    #[value(name = "mainResults", alias = "main-results")]
    MainResults,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long, value_enum)]
    pub table: Table,
    /// eval.json files from `eval`.
    #[arg(required = true)]
    pub evals: Vec<PathBuf>,
}

#[derive(Default)]
struct Row {
    test_clean: Vec<f64>,
    test_wm: Vec<f64>,
    wm_wm: Vec<f64>,
}

fn cell(xs: &[f64]) -> String {
    match xs.len() {
        0 => String::new(),
        1 => format!("{:.2} ± 0.00", 100.0 * xs[0]),
        _ => format!("{:.2} ± {:.2}", 100.0 * mean(xs), 100.0 * std_dev(xs)),
    }
}

pub fn report(mut ctx: Ctx, args: &ReportArgs) -> anyhow::Result<()> {
    let Table::MainResults = args.table;
    let mut rows: BTreeMap<String, Row> = BTreeMap::new();
    for path in &args.evals {
        let text = ctx.read_text(path)?;
        let e: EvalReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let row = rows.entry(e.dataset.clone()).or_default();
        match e.method {
            Some(Method::Clean) => row.test_clean.push(e.auc_test),
            Some(_) => {
                row.test_wm.push(e.auc_test);
                row.wm_wm.push(e.auc_wm.with_context(|| format!("{} has no trigger-set AUC", path.display()))?);
            }
            None => anyhow::bail!("{} does not say which method trained the model", path.display()),
        }
    }
    let mut csv = String::from("dataset,auc_test_clean,auc_test_wm,auc_wm_wm\n");
    for (name, r) in &rows {
        csv += &format!("{name},{},{},{}\n", cell(&r.test_clean), cell(&r.test_wm), cell(&r.wm_wm));
    }
    ctx.write("main_results.csv", &csv)?;
    print!("{csv}");
    ctx.finish()
}
