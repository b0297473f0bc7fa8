//! Evaluation harness: AUROC, Cohen's d, bootstrap intervals and the
//! calibration protocols (hold-out split, leave-one-out, cross-domain transfer).
//!
//! Grounded records are the positive class and are expected to score higher.

mod bootstrap;
mod metrics;
mod protocol;

use serde::{Deserialize, Serialize};

use crate::data::{HallucType, Label};

pub use bootstrap::{bootstrap_ci, bootstrap_ci_scores, BootstrapCi, Statistic, DEFAULT_CONFIDENCE, DEFAULT_RESAMPLES};
pub use metrics::{auroc, cohens_d};
pub use protocol::{
    loocv_eval, loocv_scores, score_records, sgi_scores, split_calibrate_eval, split_scores, summarize,
    transfer_matrix, EvalOptions, EvalSummary, Scorer, TransferMatrix, ORIENTATION,
};

/// A single record's score under some detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub record_id: String,
    pub score: f64,
    pub label: Label,
    pub domain: String,
    pub halluc_type: Option<HallucType>,
}

/// (grounded scores, hallucinated scores), in record order.
pub fn split_by_label(scored: &[ScoredRecord]) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in scored {
        match s.label {
            Label::Grounded => pos.push(s.score),
            Label::Hallucinated => neg.push(s.score),
        }
    }
    (pos, neg)
}
