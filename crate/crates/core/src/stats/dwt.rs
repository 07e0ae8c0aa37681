use super::kde::{kde_sample, mean, silverman_bandwidth};
use crate::error::{Error, Result};
use crate::rng;

/// Fewest AUC values per side accepted by [`dwt_threshold`].
pub const MIN_SAMPLES: usize = 4;

/// Number of sampling blocks needed for confidence `gamma`: `⌈−ln(1−γ)⌉`.
pub fn confidence_blocks(gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence {gamma} must lie in (0, 1)")));
    }
    Ok(((-(1.0 - gamma).ln()).ceil() as usize).max(1))
}

/// Sample size `n1 = ⌈n0 · (eps0/eps1)^((4+d)/4)⌉` that scales a KDE's
/// relative error bound from `eps0` to `eps1` in `d` dimensions.
pub fn required_sample_size(n0: usize, eps0: f64, eps1: f64, d: usize) -> Result<usize> {
    if !(eps0 > 0.0 && eps1 > 0.0 && eps0.is_finite() && eps1.is_finite()) {
        return Err(Error::InvalidArgument("error bounds must be positive".into()));
    }
    let raw = n0 as f64 * (eps0 / eps1).powf((4 + d) as f64 / 4.0);
    // Absorb rounding noise so exact integers are not bumped up.
    Ok((raw * (1.0 - 1e-12)).ceil() as usize)
}

/// Outcome of dynamic watermark thresholding.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThresholdReport {
    pub t: f64,
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub seed: u64,
    /// Per-block fraction of clean draws above `t`.
    pub observed_fpr: Vec<f64>,
    /// Per-block fraction of watermarked draws at or below `t`.
    pub observed_fnr: Vec<f64>,
    pub certificate: bool,
    pub h_clean: f64,
    pub h_wm: f64,
    /// Largest clean draw over all blocks.
    pub max_clean: f64,
    /// Smallest watermarked draw over all blocks.
    pub min_wm: f64,
}

impl ThresholdReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_side(name: &str, x: &[f64]) -> Result<()> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::SampleSize { n: x.len(), min: MIN_SAMPLES, max: usize::MAX });
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("{name} AUC {v} outside [0, 1]")));
    }
    Ok(())
}

fn extremes(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Threshold minimising FPR + FNR over pooled draws; ties keep the lowest `t`.
/// A clean draw is a false positive when `> t`, a watermarked draw a false
/// negative when `≤ t`.
fn sweep(mut clean: Vec<f64>, mut wm: Vec<f64>) -> f64 {
    clean.sort_by(f64::total_cmp);
    wm.sort_by(f64::total_cmp);
    let (nc, nw) = (clean.len() as f64, wm.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = (f64::INFINITY, f64::NAN);
    while i < clean.len() || j < wm.len() {
        let t = match (clean.get(i), wm.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < clean.len() && clean[i] <= t {
            i += 1;
        }
        while j < wm.len() && wm[j] <= t {
            j += 1;
        }
        let cost = (clean.len() - i) as f64 / nc + j as f64 / nw;
        if cost < best.0 {
            best = (cost, t);
        }
    }
    best.1
}

/// Dynamic watermark thresholding.
///
/// Draws `m = ⌈−ln(1−γ)⌉` blocks of `n` values from each side's KDE. When
/// every block separates perfectly the threshold is the midpoint of the gap
/// and a certificate is issued; otherwise a pooled sweep picks `t`.
pub fn dwt_threshold(clean: &[f64], wm: &[f64], n: usize, gamma: f64, seed: u64) -> Result<ThresholdReport> {
    check_side("clean", clean)?;
    check_side("watermarked", wm)?;
    if n == 0 {
        return Err(Error::InvalidArgument("block size n must be positive".into()));
    }
    let (clean_mean, wm_mean) = (mean(clean), mean(wm));
    if clean_mean >= wm_mean {
        return Err(Error::SidesInverted { clean_mean, wm_mean });
    }
    let m = confidence_blocks(gamma)?;
    let h_clean = silverman_bandwidth(clean)?;
    let h_wm = silverman_bandwidth(wm)?;
    let block = |b: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            kde_sample(clean, h_clean, n, rng::derive_indexed(seed, "dwt-clean", b as u64))?,
            kde_sample(wm, h_wm, n, rng::derive_indexed(seed, "dwt-wm", b as u64))?,
        ))
    };

    let mut max_clean = f64::NEG_INFINITY;
    let mut min_wm = f64::INFINITY;
    let mut separated = true;
    for b in 0..m {
        let (c, w) = block(b)?;
        let (_, c_hi) = extremes(&c);
        let (w_lo, _) = extremes(&w);
        separated &= c_hi < w_lo;
        max_clean = max_clean.max(c_hi);
        min_wm = min_wm.min(w_lo);
    }

    let mut report = ThresholdReport {
        t: 0.0,
        n,
        m,
        gamma,
        seed,
        observed_fpr: vec![0.0; m],
        observed_fnr: vec![0.0; m],
        certificate: false,
        h_clean,
        h_wm,
        max_clean,
        min_wm,
    };
    if separated && max_clean < min_wm {
        report.t = 0.5 * (max_clean + min_wm);
        report.certificate = true;
        return Ok(report);
    }

    // Blocks are regenerated from their seeds rather than held during the
    // certificate pass.
    let blocks = (0..m).map(block).collect::<Result<Vec<_>>>()?;
    let pooled_clean: Vec<f64> = blocks.iter().flat_map(|(c, _)| c.iter().copied()).collect();
    let pooled_wm: Vec<f64> = blocks.iter().flat_map(|(_, w)| w.iter().copied()).collect();
    let t = sweep(pooled_clean, pooled_wm);
    report.t = t;
    for (b, (c, w)) in blocks.iter().enumerate() {
        report.observed_fpr[b] = c.iter().filter(|&&v| v > t).count() as f64 / n as f64;
        report.observed_fnr[b] = w.iter().filter(|&&v| v <= t).count() as f64 / n as f64;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_counts() {
        let gammas = [0.5, 0.9, 0.95, 0.99, 0.9973, 0.9999];
        let expected = [1, 3, 3, 5, 6, 10];
        for (&g, &m) in gammas.iter().zip(&expected) {
            assert_eq!(confidence_blocks(g).unwrap(), m, "gamma {g}");
            assert!((-(m as f64)).exp() <= 1.0 - g);
        }
        // Five blocks reach 1 − e⁻⁵ ≈ 0.99326, short of 0.9973.
        assert!((-5.0f64).exp() > 1.0 - 0.9973);
        assert!(confidence_blocks(1.0).is_err());
    }

    #[test]
    fn sample_size_scaling() {
        assert_eq!(required_sample_size(4, 0.1, 0.1, 1).unwrap(), 4);
        assert_eq!(required_sample_size(7, 0.2, 0.2, 3).unwrap(), 7);
        assert_eq!(required_sample_size(4, 0.1, 0.05, 1).unwrap(), 10);
    }

    #[test]
    fn separated_fixture_certifies() {
        let clean = [0.05, 0.08, 0.10, 0.12];
        let wm = [0.95, 0.96, 0.97, 0.98];
        let r = dwt_threshold(&clean, &wm, 200_000, 0.95, 1).unwrap();
        assert!(r.certificate);
        assert_eq!(r.m, 3);
        assert!(r.observed_fpr.iter().chain(&r.observed_fnr).all(|&x| x == 0.0));
        assert!(r.t > 0.2 && r.t < 0.9, "t = {}", r.t);
        assert!(r.max_clean < r.t && r.t < r.min_wm);
        assert_eq!(r, dwt_threshold(&clean, &wm, 200_000, 0.95, 1).unwrap());
    }

    #[test]
    fn overlapping_samples_fall_back_to_sweep() {
        let clean = [0.40, 0.50, 0.55, 0.60, 0.45];
        let wm = [0.52, 0.62, 0.70, 0.58, 0.66];
        let r = dwt_threshold(&clean, &wm, 5000, 0.95, 2).unwrap();
        assert!(!r.certificate);
        assert!(r.observed_fpr.iter().chain(&r.observed_fnr).any(|&x| x > 0.0));
        assert!(r.t > 0.45 && r.t < 0.66, "t = {}", r.t);
    }

    #[test]
    fn sweep_prefers_lower_threshold_on_ties() {
        // Any t in [0.2, 0.8) separates perfectly; the lowest candidate wins.
        assert_eq!(sweep(vec![0.1, 0.2], vec![0.8, 0.9]), 0.2);
        // Every candidate costs the same when sides coincide.
        assert_eq!(sweep(vec![0.5], vec![0.5]), 0.5);
    }

    #[test]
    fn inverted_sides_rejected() {
        let a = [0.9, 0.8, 0.85, 0.95];
        let b = [0.1, 0.2, 0.15, 0.05];
        assert!(matches!(dwt_threshold(&a, &b, 10, 0.95, 0), Err(Error::SidesInverted { .. })));
        assert!(matches!(dwt_threshold(&b[..3], &a, 10, 0.95, 0), Err(Error::SampleSize { .. })));
    }

    #[test]
    fn report_json_round_trip() {
        let r = dwt_threshold(&[0.05, 0.08, 0.10, 0.12], &[0.95, 0.96, 0.97, 0.98], 100, 0.9, 3).unwrap();
        assert_eq!(ThresholdReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}
