use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auroc, cohens_d};
use super::{split_by_label, ScoredRecord};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
const MIN_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Auroc,
    CohensD,
}

impl Statistic {
    fn compute(self, pos: &[f64], neg: &[f64]) -> Result<f64> {
        match self {
            Statistic::Auroc => auroc(pos, neg),
            Statistic::CohensD => cohens_d(pos, neg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCi {
    pub low: f64,
    pub high: f64,
    /// Resamples whose statistic was undefined and therefore skipped.
    pub degenerate: usize,
}

/// Linear interpolation between order statistics of a sorted sample.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample(rng: &mut impl Rng, xs: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]));
}

/// Stratified percentile bootstrap over raw positive/negative scores.
pub fn bootstrap_ci_scores(
    positives: &[f64],
    negatives: &[f64],
    statistic: Statistic,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    if positives.is_empty() {
        return Err(Error::EmptyGroup("positive"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyGroup("negative"));
    }
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidInput(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }

    let stats: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(pos, neg), i| {
                let mut rng = stream_rng(seed, i as u64);
                resample(&mut rng, positives, pos);
                resample(&mut rng, negatives, neg);
                statistic.compute(pos, neg).ok()
            },
        )
        .collect();

    let mut valid: Vec<f64> = stats.iter().flatten().copied().collect();
    let degenerate = resamples - valid.len();
    if valid.is_empty() {
        return Err(Error::AllResamplesDegenerate(resamples));
    }
    valid.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    Ok(BootstrapCi {
        low: quantile_sorted(&valid, alpha),
        high: quantile_sorted(&valid, 1.0 - alpha),
        degenerate,
    })
}

/// Bootstrap interval for `statistic` with grounded records as positives.
pub fn bootstrap_ci(
    scored: &[ScoredRecord],
    statistic: Statistic,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    let (pos, neg) = split_by_label(scored);
    bootstrap_ci_scores(&pos, &neg, statistic, resamples, confidence, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 0.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
        assert_eq!(quantile_sorted(&v, 0.125), 0.5);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let pos = [0.9, 0.4, 0.7, 0.66];
        let neg = [0.5, 0.1, 0.3];
        let a = bootstrap_ci_scores(&pos, &neg, Statistic::Auroc, 500, 0.95, 9).unwrap();
        let b = bootstrap_ci_scores(&pos, &neg, Statistic::Auroc, 500, 0.95, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perfect_separation_is_degenerate_interval() {
        let ci = bootstrap_ci_scores(&[1.0; 5], &[0.0; 5], Statistic::Auroc, 1000, 0.95, 1).unwrap();
        assert_eq!((ci.low, ci.high), (1.0, 1.0));
        assert_eq!(ci.degenerate, 0);
    }

    #[test]
    fn small_sample_interval_covers_point_estimate() {
        let pos = [0.9, 0.4];
        let neg = [0.5, 0.1];
        let ci = bootstrap_ci_scores(&pos, &neg, Statistic::Auroc, 1000, 0.95, 42).unwrap();
        assert!(ci.low <= 0.75 && 0.75 <= ci.high, "{ci:?}");
        assert!(ci.high - ci.low > 0.0);
        // Oracle: with 2x2 groups every resampled AUROC is a multiple of 1/4.
        for i in 0..1000u64 {
            let mut rng = stream_rng(42, i);
            let (mut p, mut n) = (Vec::new(), Vec::new());
            resample(&mut rng, &pos, &mut p);
            resample(&mut rng, &neg, &mut n);
            let a = auroc(&p, &n).unwrap();
            assert!([0.0, 0.25, 0.5, 0.75, 1.0].contains(&a), "{a}");
        }
    }

    #[test]
    fn skips_degenerate_cohens_d_resamples() {
        // Two-element groups frequently resample to identical values.
        let ci = bootstrap_ci_scores(&[1.0, 2.0], &[0.0, 0.5], Statistic::CohensD, 200, 0.9, 3).unwrap();
        assert!(ci.degenerate > 0);
        assert!(ci.low <= ci.high);
        let err = bootstrap_ci_scores(&[1.0, 1.0], &[0.0, 0.0], Statistic::CohensD, 200, 0.9, 3);
        assert_eq!(err, Err(Error::AllResamplesDegenerate(200)));
    }

    #[test]
    fn parameter_validation() {
        assert!(bootstrap_ci_scores(&[1.0], &[0.0], Statistic::Auroc, 99, 0.95, 0).is_err());
        assert!(bootstrap_ci_scores(&[1.0], &[0.0], Statistic::Auroc, 100, 1.0, 0).is_err());
        assert_eq!(
            bootstrap_ci_scores(&[], &[0.0], Statistic::Auroc, 100, 0.9, 0),
            Err(Error::EmptyGroup("positive"))
        );
    }
}
