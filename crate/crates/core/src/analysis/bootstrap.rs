use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DfsError, Result};

/// Percentile bootstrap summary of a sample mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Resamples `samples` with replacement `k_resamples` times and reports the mean of the
/// resampled means with a percentile interval at `ci_level`.
pub fn bootstrap(samples: &[f64], k_resamples: usize, ci_level: f64, seed: u64) -> Result<Bootstrap> {
    if samples.is_empty() {
        return Err(DfsError::TooFewPoints { need: 1, have: 0 });
    }
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(DfsError::InvalidParameter(format!("confidence level {ci_level} outside (0, 1)")));
    }
    if k_resamples == 0 {
        return Err(DfsError::InvalidParameter("zero bootstrap resamples".into()));
    }
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..k_resamples)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / k_resamples as f64;
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - ci_level) / 2.0;
    Ok(Bootstrap {
        mean,
        ci_lo: quantile(&means, alpha).min(mean),
        ci_hi: quantile(&means, 1.0 - alpha).max(mean),
    })
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
