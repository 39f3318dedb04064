use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spearman::spearman;
use crate::error::{Error, Result};

pub const MIN_REPLICATES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    /// Replicates that produced a correlation.
    pub replicates: usize,
    /// Replicates with a constant resample, which have no correlation.
    pub skipped: usize,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Percentile bootstrap interval for Spearman's rho over `(gold, predicted)`
/// points, resampled with replacement.
pub fn bootstrap_ci(
    points: &[(f64, f64)],
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval> {
    if replicates < MIN_REPLICATES {
        return Err(Error::Config(format!(
            "bootstrap needs at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level {level} is outside (0, 1)"
        )));
    }
    if points.len() < 2 {
        return Err(Error::Eval("bootstrap needs at least 2 points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut gold = vec![0.0; n];
    let mut pred = vec![0.0; n];
    let mut rhos = Vec::with_capacity(replicates);
    let mut skipped = 0;
    for _ in 0..replicates {
        for (g, p) in gold.iter_mut().zip(&mut pred) {
            (*g, *p) = points[rng.random_range(0..n)];
        }
        match spearman(&gold, &pred) {
            Ok(r) => rhos.push(r),
            Err(_) => skipped += 1,
        }
    }
    if rhos.is_empty() {
        return Err(Error::Eval(
            "every bootstrap replicate was degenerate".into(),
        ));
    }
    rhos.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(ConfidenceInterval {
        lo: percentile(&rhos, tail),
        hi: percentile(&rhos, 1.0 - tail),
        replicates: rhos.len(),
        skipped,
    })
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
