use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

/// Bandwidth used when a sample has no spread at all.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

/// Draws per independently seeded partition. Fixed so results never depend
/// on how many workers run.
pub(crate) const CHUNK: usize = 1 << 16;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Linearly interpolated quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9 · min(σ̂, IQR/1.34) · n^(−1/5)`.
///
/// A zero IQR (heavy repeats) falls back to σ̂ alone; when both are zero the
/// result is [`BANDWIDTH_FLOOR`].
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::SampleSize { n, min: 2, max: usize::MAX });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample value".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = std_dev(&sorted);
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    Ok(if h > 0.0 { h.max(BANDWIDTH_FLOOR) } else { BANDWIDTH_FLOOR })
}

fn draw_chunk(sample: &[f64], h: f64, len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..len)
        .map(|_| {
            let x = sample[r.random_range(0..sample.len())];
            let z: f64 = r.sample(StandardNormal);
            x + h * z
        })
        .collect()
}

/// Draws `count` values from the Gaussian KDE of `sample` with bandwidth `h`.
pub fn kde_sample(sample: &[f64], h: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::SampleSize { n: 0, min: 1, max: usize::MAX });
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth {h} must be finite and non-negative")));
    }
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(count - c * CHUNK);
            draw_chunk(sample, h, len, rng::derive_indexed(seed, "kde", c as u64))
        })
        .collect();
    Ok(parts.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_hits_floor() {
        assert_eq!(silverman_bandwidth(&[0.7; 8]).unwrap(), BANDWIDTH_FLOOR);
    }

    #[test]
    fn standard_normal_bandwidth() {
        let mut r = rng::seeded(17);
        let x: Vec<f64> = (0..10_000).map(|_| r.sample(StandardNormal)).collect();
        let h = silverman_bandwidth(&x).unwrap();
        let expected = 0.9 * 10_000f64.powf(-0.2);
        assert!((h / expected - 1.0).abs() < 0.05, "h = {h}");
    }

    #[test]
    fn bandwidth_is_scale_homogeneous() {
        let x = [0.1, 0.4, 0.35, 0.8, 0.55, 0.2, 0.9];
        let y: Vec<f64> = x.iter().map(|v| v * 3.5).collect();
        let hx = silverman_bandwidth(&x).unwrap();
        let hy = silverman_bandwidth(&y).unwrap();
        assert!((hy - 3.5 * hx).abs() < 1e-12);
    }

    #[test]
    fn zero_bandwidth_draws_original_points() {
        let x = [0.1, 0.5, 0.9];
        for v in kde_sample(&x, 0.0, 1000, 3).unwrap() {
            assert!(x.contains(&v));
        }
    }

    #[test]
    fn draw_mean_matches_sample_mean() {
        let x = [0.2, 0.4, 0.45, 0.9, 0.1];
        let h = silverman_bandwidth(&x).unwrap();
        let n = 1_000_000;
        let draws = kde_sample(&x, h, n, 5).unwrap();
        assert_eq!(draws.len(), n);
        // Draw variance is the sample's population variance plus h².
        let pop_var = x.iter().map(|v| (v - mean(&x)).powi(2)).sum::<f64>() / x.len() as f64;
        let sigma = (pop_var + h * h).sqrt();
        assert!((mean(&draws) - mean(&x)).abs() < 4.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn seeded_draws_repeat() {
        let x = [0.3, 0.6];
        assert_eq!(kde_sample(&x, 0.1, 70_000, 9).unwrap(), kde_sample(&x, 0.1, 70_000, 9).unwrap());
        assert_ne!(kde_sample(&x, 0.1, 10, 9).unwrap(), kde_sample(&x, 0.1, 10, 10).unwrap());
    }

    #[test]
    fn prefix_stable_across_counts() {
        // Partition seeds depend only on the partition index.
        let x = [0.3, 0.6, 0.2];
        let long = kde_sample(&x, 0.05, 3 * CHUNK, 4).unwrap();
        let short = kde_sample(&x, 0.05, CHUNK + 10, 4).unwrap();
        assert_eq!(&long[..CHUNK + 10], &short[..]);
    }
}
