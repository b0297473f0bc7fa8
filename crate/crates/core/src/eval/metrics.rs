use crate::error::{Error, Result};

fn check_finite(scores: &[f64]) -> Result<()> {
    match scores.iter().find(|x| !x.is_finite()) {
        Some(&bad) => Err(Error::NonFiniteScore(bad)),
        None => Ok(()),
    }
}

/// Area under the ROC curve via the Mann-Whitney U statistic, ties counted half.
///
/// `positives` are the scores expected to be higher (grounded records).
/// The rank sum is accumulated in half-units so the result is exact.
pub fn auroc(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() {
        return Err(Error::EmptyGroup("positive"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyGroup("negative"));
    }
    check_finite(positives)?;
    check_finite(negatives)?;

    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Twice the rank sum of positives; a tie block spanning ranks i+1..=j has
    // midrank (i + 1 + j) / 2.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let pos_in_block = all[i..j].iter().filter(|x| x.1).count() as u64;
        twice_rank_sum += pos_in_block * (i as u64 + 1 + j as u64);
        i = j;
    }
    let n_pos = positives.len() as u64;
    let n_neg = negatives.len() as u64;
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n-1 denominator.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standardized mean difference with the pooled sample standard deviation.
pub fn cohens_d(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    for g in [group_a, group_b] {
        if g.len() < 2 {
            return Err(Error::GroupTooSmall(g.len()));
        }
        check_finite(g)?;
    }
    let (na, nb) = (group_a.len() as f64, group_b.len() as f64);
    let pooled_var = ((na - 1.0) * sample_variance(group_a) + (nb - 1.0) * sample_variance(group_b))
        / (na + nb - 2.0);
    let pooled_sd = pooled_var.sqrt();
    if pooled_sd <= 1e-12 {
        return Err(Error::DegenerateVariance(pooled_sd));
    }
    Ok((mean(group_a) - mean(group_b)) / pooled_sd)
}
