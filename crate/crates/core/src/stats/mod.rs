//! Ranking metric, normality and bootstrap tests, KDE and thresholding.

mod auc;
mod bootstrap;
mod dwt;
mod kde;
mod shapiro;

use std::path::Path;

pub use auc::auc;
pub use bootstrap::{smoothed_bootstrap_test, AucSamples};
pub use dwt::{confidence_blocks, dwt_threshold, required_sample_size, ThresholdReport, MIN_SAMPLES};
pub use kde::{kde_sample, mean, silverman_bandwidth, std_dev, BANDWIDTH_FLOOR};
pub use shapiro::shapiro_wilk;

use crate::error::{Error, Result};
use crate::nn::LinkPredictor;
use crate::wm::WatermarkSet;

/// Result of testing a suspect model on a trigger set.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Ownership {
    pub owned: bool,
    pub auc: f64,
}

/// Scores the trigger set with `model`; ownership holds when its AUC exceeds `t`.
pub fn verify_ownership(model: &LinkPredictor, wm: &WatermarkSet, t: f64) -> Result<Ownership> {
    let auc = wm.task()?.auc(model)?;
    Ok(Ownership { owned: auc > t, auc })
}

/// Parses one AUC value per line. Blank lines and `#` comments are skipped,
/// as is a non-numeric first line (a header).
pub fn parse_auc_list(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return Err(Error::Parse { line: idx + 1, message: format!("non-finite value {v}") }),
            Err(_) if out.is_empty() && idx == 0 => continue,
            Err(e) => return Err(Error::Parse { line: idx + 1, message: e.to_string() }),
        }
    }
    Ok(out)
}

pub fn load_auc_list(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    parse_auc_list(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_auc_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}\n")).collect()
}
