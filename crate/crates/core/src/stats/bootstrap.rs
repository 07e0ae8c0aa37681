use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::kde::{mean, silverman_bandwidth};
use crate::error::{Error, Result};
use crate::rng;

/// Replicates per independently seeded partition.
const REPLICATE_CHUNK: usize = 4096;

/// Paired AUC samples from clean and watermarked models.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AucSamples {
    pub clean: Vec<f64>,
    pub watermarked: Vec<f64>,
}

impl AucSamples {
    pub fn new(clean: Vec<f64>, watermarked: Vec<f64>) -> Self {
        AucSamples { clean, watermarked }
    }

    pub fn swapped(&self) -> Self {
        AucSamples {
            clean: self.watermarked.clone(),
            watermarked: self.clean.clone(),
        }
    }
}

fn smoothed_mean(group: &[f64], h: f64, r: &mut impl Rng) -> f64 {
    let mut s = 0.0;
    for _ in 0..group.len() {
        let x = group[r.random_range(0..group.len())];
        let z: f64 = r.sample(StandardNormal);
        s += x + h * z;
    }
    s / group.len() as f64
}

/// One-sided smoothed-bootstrap p-value for `mean(watermarked) > mean(clean)`.
///
/// Both groups are shifted to the pooled mean so the null holds, then each
/// replicate resamples every group with replacement and jitters each draw
/// with Gaussian noise at that group's Silverman bandwidth.
pub fn smoothed_bootstrap_test(samples: &AucSamples, replicates: usize, seed: u64) -> Result<f64> {
    let (c, w) = (&samples.clean, &samples.watermarked);
    if c.is_empty() || w.is_empty() {
        return Err(Error::SampleSize { n: 0, min: 1, max: usize::MAX });
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one replicate".into()));
    }
    let bandwidth = |g: &[f64]| if g.len() >= 2 { silverman_bandwidth(g) } else { Ok(super::kde::BANDWIDTH_FLOOR) };
    let (h_c, h_w) = (bandwidth(c)?, bandwidth(w)?);
    let observed = mean(w) - mean(c);
    let pooled = (c.iter().sum::<f64>() + w.iter().sum::<f64>()) / (c.len() + w.len()) as f64;
    let c0: Vec<f64> = c.iter().map(|x| x - mean(c) + pooled).collect();
    let w0: Vec<f64> = w.iter().map(|x| x - mean(w) + pooled).collect();

    let chunks = replicates.div_ceil(REPLICATE_CHUNK);
    let exceed: usize = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::seeded(rng::derive_indexed(seed, "bootstrap", k as u64));
            let len = REPLICATE_CHUNK.min(replicates - k * REPLICATE_CHUNK);
            (0..len)
                .filter(|_| {
                    let dc = smoothed_mean(&c0, h_c, &mut r);
                    let dw = smoothed_mean(&w0, h_w, &mut r);
                    dw - dc >= observed
                })
                .count()
        })
        .sum();
    Ok((1 + exceed) as f64 / (replicates + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> AucSamples {
        AucSamples::new(
            vec![14.37, 6.73, 12.49, 15.54, 10.21, 8.03, 4.23, 40.05, 5.02, 10.72],
            vec![97.50, 98.02, 98.09, 97.75, 97.83, 97.21, 97.47, 97.15, 97.87, 97.96],
        )
    }

    #[test]
    fn separated_groups_reject() {
        let p = smoothed_bootstrap_test(&table(), 20_000, 1).unwrap();
        assert!(p < 0.001, "p = {p}");
        assert!(p > 0.0);
    }

    #[test]
    fn identical_groups_near_half() {
        let x = vec![0.61, 0.55, 0.7, 0.64, 0.58, 0.66];
        let p = smoothed_bootstrap_test(&AucSamples::new(x.clone(), x), 20_000, 2).unwrap();
        assert!((p - 0.5).abs() < 0.05, "p = {p}");
    }

    #[test]
    fn swapping_roles_complements_p() {
        let s = AucSamples::new(vec![0.40, 0.52, 0.47, 0.55, 0.43], vec![0.50, 0.58, 0.49, 0.61, 0.53]);
        let p = smoothed_bootstrap_test(&s, 20_000, 3).unwrap();
        let q = smoothed_bootstrap_test(&s.swapped(), 20_000, 4).unwrap();
        assert!((p + q - 1.0).abs() < 0.03, "p = {p}, q = {q}");
    }

    #[test]
    fn deterministic_per_seed() {
        let s = table();
        assert_eq!(
            smoothed_bootstrap_test(&s, 9000, 5).unwrap(),
            smoothed_bootstrap_test(&s, 9000, 5).unwrap()
        );
    }

    #[test]
    fn null_p_values_are_roughly_uniform() {
        let trials = 200;
        let mut ps: Vec<f64> = (0..trials)
            .map(|t| {
                let mut r = rng::seeded(1000 + t);
                let mut draw = || (0..8).map(|_| r.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>();
                let s = AucSamples::new(draw(), draw());
                smoothed_bootstrap_test(&s, 2000, t).unwrap()
            })
            .collect();
        ps.sort_by(f64::total_cmp);
        let ks = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let lo = i as f64 / trials as f64;
                let hi = (i + 1) as f64 / trials as f64;
                (p - lo).abs().max((hi - p).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.1, "K-S distance {ks}");
    }
}
