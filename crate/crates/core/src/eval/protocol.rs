use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci_scores, Statistic, DEFAULT_CONFIDENCE, DEFAULT_RESAMPLES};
use super::metrics::{auroc, cohens_d, mean, sample_variance};
use super::{split_by_label, ScoredRecord};
use crate::data::DetectionRecord;
use crate::direction::{
    build_reference_index, calibrate_global, direction_similarity, gamma, GroundingDirection, ReferenceIndex,
};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sphere;

/// Score orientation used by every summary.
pub const ORIENTATION: &str = "grounded-higher";

const SPLIT_STREAM: u64 = 0x5EED_5B11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scorer {
    GammaGlobal,
    GammaLocal { k: usize },
}

impl Scorer {
    pub fn name(&self) -> String {
        match self {
            Scorer::GammaGlobal => "gamma".to_string(),
            Scorer::GammaLocal { k } => format!("gamma-local(k={k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            resamples: DEFAULT_RESAMPLES,
            confidence: DEFAULT_CONFIDENCE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub auroc: f64,
    /// `None` when the pooled standard deviation is degenerate.
    pub cohens_d: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub sd_pos: Option<f64>,
    pub sd_neg: Option<f64>,
    pub orientation: String,
    pub scorer: String,
    pub statistic: Statistic,
    pub resamples: usize,
    pub confidence: f64,
    pub degenerate_resamples: usize,
    pub seed: u64,
}

fn sd(xs: &[f64]) -> Option<f64> {
    (xs.len() >= 2).then(|| sample_variance(xs).sqrt())
}

/// AUROC, Cohen's d, group statistics and a bootstrap CI for the AUROC.
pub fn summarize(scored: &[ScoredRecord], scorer: &str, opts: &EvalOptions) -> Result<EvalSummary> {
    let (pos, neg) = split_by_label(scored);
    let auc = auroc(&pos, &neg)?;
    let d = match cohens_d(&pos, &neg) {
        Ok(d) => Some(d),
        Err(Error::DegenerateVariance(_) | Error::GroupTooSmall(_)) => None,
        Err(e) => return Err(e),
    };
    let ci = bootstrap_ci_scores(&pos, &neg, Statistic::Auroc, opts.resamples, opts.confidence, opts.seed)?;
    Ok(EvalSummary {
        auroc: auc,
        cohens_d: d,
        ci_low: ci.low,
        ci_high: ci.high,
        n_pos: pos.len(),
        n_neg: neg.len(),
        mean_pos: mean(&pos),
        mean_neg: mean(&neg),
        sd_pos: sd(&pos),
        sd_neg: sd(&neg),
        orientation: ORIENTATION.to_string(),
        scorer: scorer.to_string(),
        statistic: Statistic::Auroc,
        resamples: opts.resamples,
        confidence: opts.confidence,
        degenerate_resamples: ci.degenerate,
        seed: opts.seed,
    })
}

fn scored(rec: &DetectionRecord, score: f64) -> ScoredRecord {
    ScoredRecord {
        record_id: rec.id.clone(),
        score,
        label: rec.label,
        domain: rec.domain.clone(),
        halluc_type: rec.halluc_type,
    }
}

fn require_qr(rec: &DetectionRecord) -> Result<(&sphere::UnitEmbedding, &sphere::UnitEmbedding)> {
    rec.qr()
        .ok_or_else(|| Error::InvalidInput(format!("record {} lacks query/response embeddings", rec.id)))
}

enum Fitted {
    Global(GroundingDirection),
    Local(ReferenceIndex, usize),
}

impl Fitted {
    fn fit(calibration: &[&DetectionRecord], scorer: Scorer, tag: &str) -> Result<Self> {
        match scorer {
            Scorer::GammaGlobal => {
                let pairs = calibration
                    .iter()
                    .map(|r| require_qr(r).map(|(q, r)| (q.clone(), r.clone())))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Fitted::Global(calibrate_global(&pairs, tag)?.direction))
            }
            Scorer::GammaLocal { k } => {
                let index = build_reference_index(calibration.iter().copied())?;
                if k == 0 || k > index.len() {
                    return Err(Error::KOutOfRange { k, len: index.len() });
                }
                Ok(Fitted::Local(index, k))
            }
        }
    }

    fn score(&self, rec: &DetectionRecord) -> Result<f64> {
        let (q, r) = require_qr(rec)?;
        match self {
            Fitted::Global(dir) => Ok(gamma(q, r, dir)?.value),
            Fitted::Local(index, k) => Ok(index.gamma_local_excluding(q, r, *k, None)?.value),
        }
    }
}

fn score_all(records: &[&DetectionRecord], fitted: &Fitted) -> Result<Vec<ScoredRecord>> {
    records
        .par_iter()
        .map(|rec| fitted.score(rec).map(|s| scored(rec, s)))
        .collect()
}

/// Scores every record against a global grounding direction.
pub fn score_records(records: &[DetectionRecord], dir: &GroundingDirection) -> Result<Vec<ScoredRecord>> {
    let refs: Vec<&DetectionRecord> = records.iter().collect();
    score_all(&refs, &Fitted::Global(dir.clone()))
}

/// SGI score for every record; all records need question, context and response embeddings.
pub fn sgi_scores(records: &[DetectionRecord]) -> Result<Vec<ScoredRecord>> {
    records
        .par_iter()
        .map(|rec| {
            let (q, c, r) = rec.qcr().ok_or_else(|| {
                Error::InvalidInput(format!("record {} lacks question/context/response embeddings", rec.id))
            })?;
            Ok(scored(rec, sphere::sgi(q, c, r)?.ratio))
        })
        .collect()
}

/// Calibrates on a seeded `grounded_fraction` of the grounded records and scores
/// the held-out grounded records plus every hallucinated record.
pub fn split_scores(
    records: &[DetectionRecord],
    grounded_fraction: f64,
    scorer: Scorer,
    seed: u64,
) -> Result<Vec<ScoredRecord>> {
    if !(grounded_fraction > 0.0 && grounded_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "grounded fraction must lie in (0, 1], got {grounded_fraction}"
        )));
    }
    let mut grounded: Vec<&DetectionRecord> = records.iter().filter(|r| r.is_grounded()).collect();
    let n_cal = (grounded_fraction * grounded.len() as f64).floor() as usize;
    if n_cal == 0 || n_cal >= grounded.len() {
        return Err(Error::InsufficientGrounded(format!(
            "{} grounded records at fraction {grounded_fraction} leave {n_cal} for calibration and {} for evaluation",
            grounded.len(),
            grounded.len().saturating_sub(n_cal)
        )));
    }
    grounded.shuffle(&mut stream_rng(seed, SPLIT_STREAM));
    let (calibration, held_out) = grounded.split_at(n_cal);
    let fitted = Fitted::fit(calibration, scorer, "split-calibration")?;

    // Held-out grounded records keep their original relative order.
    let mut keep = vec![false; records.len()];
    let held_ids: std::collections::HashSet<&str> = held_out.iter().map(|r| r.id.as_str()).collect();
    for (i, rec) in records.iter().enumerate() {
        keep[i] = !rec.is_grounded() || held_ids.contains(rec.id.as_str());
    }
    let eval: Vec<&DetectionRecord> = records.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| r).collect();
    score_all(&eval, &fitted)
}

pub fn split_calibrate_eval(
    records: &[DetectionRecord],
    grounded_fraction: f64,
    scorer: Scorer,
    opts: &EvalOptions,
) -> Result<EvalSummary> {
    let scored = split_scores(records, grounded_fraction, scorer, opts.seed)?;
    summarize(&scored, &scorer.name(), opts)
}

/// Scores each record with its own id excluded from the reference set.
pub fn loocv_scores(records: &[DetectionRecord], reference: &ReferenceIndex, scorer: Scorer) -> Result<Vec<ScoredRecord>> {
    if records.len() < 2 {
        return Err(Error::DomainTooSmall(records.len()));
    }
    let domain = &records[0].domain;
    if let Some(other) = records.iter().find(|r| &r.domain != domain) {
        return Err(Error::InvalidInput(format!(
            "leave-one-out expects a single domain, found {domain:?} and {:?}",
            other.domain
        )));
    }
    let full = match scorer {
        Scorer::GammaGlobal => Some(reference.global_direction(None, "loocv")?),
        Scorer::GammaLocal { .. } => None,
    };
    records
        .par_iter()
        .map(|rec| {
            let (q, r) = require_qr(rec)?;
            let value = match scorer {
                Scorer::GammaGlobal => match reference.position_of(&rec.id) {
                    Some(_) => gamma(q, r, &reference.global_direction(Some(&rec.id), "loocv")?)?.value,
                    None => gamma(q, r, full.as_ref().expect("global direction"))?.value,
                },
                Scorer::GammaLocal { k } => reference.gamma_local_excluding(q, r, k, Some(&rec.id))?.value,
            };
            Ok(scored(rec, value))
        })
        .collect()
}

pub fn loocv_eval(
    records: &[DetectionRecord],
    reference: &ReferenceIndex,
    scorer: Scorer,
    opts: &EvalOptions,
) -> Result<EvalSummary> {
    let scored = loocv_scores(records, reference, scorer)?;
    summarize(&scored, &format!("{} loocv", scorer.name()), opts)
}

/// Cross-domain AUROC and direction-cosine grid. Rows are calibration
/// sources, columns are test domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub domains: Vec<String>,
    pub auroc_cells: Vec<Vec<f64>>,
    pub direction_cosines: Vec<Vec<f64>>,
}

impl TransferMatrix {
    pub fn in_domain_mean(&self) -> f64 {
        let n = self.domains.len();
        (0..n).map(|i| self.auroc_cells[i][i]).sum::<f64>() / n as f64
    }

    pub fn cross_domain_mean(&self) -> f64 {
        let n = self.domains.len();
        let off: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.auroc_cells[i][j])
            .collect();
        off.iter().sum::<f64>() / off.len() as f64
    }

    pub fn mean_off_diagonal_cosine(&self) -> f64 {
        let n = self.domains.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += self.direction_cosines[i][j];
                }
            }
        }
        total / (n * (n - 1)) as f64
    }
}

/// Builds the transfer grid. The diagonal uses the hold-out split at
/// `grounded_fraction`; off-diagonal cells calibrate on every grounded record
/// of the source domain and score every record of the target domain.
pub fn transfer_matrix(
    domains: &[(String, Vec<DetectionRecord>)],
    grounded_fraction: f64,
    seed: u64,
) -> Result<TransferMatrix> {
    if domains.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "transfer needs at least 2 domains, got {}",
            domains.len()
        )));
    }
    for (name, recs) in domains {
        let n_g = recs.iter().filter(|r| r.is_grounded()).count();
        if n_g == 0 || n_g == recs.len() {
            return Err(Error::InvalidInput(format!(
                "domain {name:?} needs both grounded and hallucinated records"
            )));
        }
    }
    let directions = domains
        .iter()
        .map(|(name, recs)| {
            let grounded: Vec<&DetectionRecord> = recs.iter().filter(|r| r.is_grounded()).collect();
            match Fitted::fit(&grounded, Scorer::GammaGlobal, name)? {
                Fitted::Global(dir) => Ok(dir),
                Fitted::Local(..) => unreachable!(),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let n = domains.len();
    let cells = (0..n * n)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / n, cell % n);
            let scored = if i == j {
                split_scores(&domains[i].1, grounded_fraction, Scorer::GammaGlobal, seed)?
            } else {
                score_records(&domains[j].1, &directions[i])?
            };
            let (pos, neg) = split_by_label(&scored);
            auroc(&pos, &neg)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut direction_cosines = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            direction_cosines[i][j] = direction_similarity(&directions[i], &directions[j])?;
        }
    }
    Ok(TransferMatrix {
        domains: domains.iter().map(|(d, _)| d.clone()).collect(),
        auroc_cells: cells.chunks(n).map(|row| row.to_vec()).collect(),
        direction_cosines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::sphere::normalize;

    fn rec(id: &str, label: Label, q: &[f64], r: &[f64]) -> DetectionRecord {
        let mut rec = DetectionRecord::new(id, label);
        rec.q_emb = Some(normalize(q).unwrap());
        rec.r_emb = Some(normalize(r).unwrap());
        rec
    }

    #[test]
    fn split_rejects_empty_eval_side() {
        let recs = vec![
            rec("a", Label::Grounded, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]),
            rec("b", Label::Grounded, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]),
            rec("c", Label::Hallucinated, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]),
        ];
        let err = split_calibrate_eval(&recs, 1.0, Scorer::GammaGlobal, &EvalOptions::default());
        assert!(matches!(err, Err(Error::InsufficientGrounded(_))));
        let err = split_calibrate_eval(&recs, 0.2, Scorer::GammaGlobal, &EvalOptions::default());
        assert!(matches!(err, Err(Error::InsufficientGrounded(_))));
    }

    #[test]
    fn loocv_two_record_domain_scores_against_other() {
        let a = rec("a", Label::Grounded, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        let b = rec("b", Label::Grounded, &[1.0, 0.0, 0.0], &[0.0, 0.6, 0.8]);
        let recs = vec![a.clone(), b.clone()];
        let index = build_reference_index(recs.iter()).unwrap();
        let scores = loocv_scores(&recs, &index, Scorer::GammaGlobal).unwrap();
        let da = crate::direction::displacement(a.q_emb.as_ref().unwrap(), a.r_emb.as_ref().unwrap()).unwrap();
        let db = crate::direction::displacement(b.q_emb.as_ref().unwrap(), b.r_emb.as_ref().unwrap()).unwrap();
        let cross = sphere::dot(da.direction(), db.direction());
        assert!((scores[0].score - cross).abs() < 1e-12);
        assert!((scores[1].score - cross).abs() < 1e-12);

        let local = loocv_scores(&recs, &index, Scorer::GammaLocal { k: 1 }).unwrap();
        assert!((local[0].score - cross).abs() < 1e-12);

        assert_eq!(
            loocv_scores(&recs[..1], &index, Scorer::GammaGlobal).unwrap_err(),
            Error::DomainTooSmall(1)
        );
    }

    #[test]
    fn transfer_needs_two_domains() {
        let recs = vec![
            rec("a", Label::Grounded, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]),
            rec("c", Label::Hallucinated, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]),
        ];
        assert!(transfer_matrix(&[("x".into(), recs.clone())], 0.8, 0).is_err());
        let only_halluc = vec![recs[1].clone()];
        assert!(transfer_matrix(&[("x".into(), recs), ("y".into(), only_halluc)], 0.8, 0).is_err());
    }
}
