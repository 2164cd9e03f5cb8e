//! ROC analysis and precision / recall.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("both positive and negative outcomes are required")]
    SingleClass,
    #[error("predictions and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite score")]
    NonFinite,
}

/// A scored example; higher scores mean "more positive".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryOutcome {
    pub score: f64,
    pub label: bool,
}

impl BinaryOutcome {
    pub fn new(score: f64, label: bool) -> Self {
        Self { score, label }
    }
}

pub fn outcomes(scores: &[f64], labels: &[bool]) -> Vec<BinaryOutcome> {
    scores
        .iter()
        .zip(labels)
        .map(|(&score, &label)| BinaryOutcome { score, label })
        .collect()
}

fn sorted_desc(outcomes: &[BinaryOutcome]) -> Result<(Vec<BinaryOutcome>, u64, u64), MetricError> {
    if outcomes.iter().any(|o| !o.score.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let pos = outcomes.iter().filter(|o| o.label).count() as u64;
    let neg = outcomes.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut v = outcomes.to_vec();
    v.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok((v, pos, neg))
}

/// Area under the ROC curve from the Mann-Whitney rank statistic, with
/// tied scores counted as half-correct pairs.
///
/// The statistic is accumulated in integer half-units, so the result is
/// the exact ratio `(correct + ties / 2) / (P * N)` rounded once.
pub fn roc_auc(outcomes: &[BinaryOutcome]) -> Result<f64, MetricError> {
    let (sorted, pos, neg) = sorted_desc(outcomes)?;
    // walk groups of equal score from highest to lowest; every positive in a
    // group beats all negatives below it and ties with negatives inside it
    let mut twice_u: u128 = 0;
    let mut neg_below = neg;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut p, mut n) = (0u64, 0u64);
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            if sorted[j].label {
                p += 1
            } else {
                n += 1
            }
            j += 1;
        }
        neg_below -= n;
        twice_u += 2 * p as u128 * neg_below as u128 + p as u128 * n as u128;
        i = j;
    }
    Ok(twice_u as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// ROC curve as `(fpr, tpr)` points, one per distinct score threshold,
/// from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(outcomes: &[BinaryOutcome]) -> Result<Vec<(f64, f64)>, MetricError> {
    let (sorted, pos, neg) = sorted_desc(outcomes)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].score;
        while i < sorted.len() && sorted[i].score == s {
            if sorted[i].label {
                tp += 1
            } else {
                fp += 1
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

/// Trapezoidal area under a piecewise-linear curve.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Confusion counts for binary predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predictions: &[bool], labels: &[bool]) -> Result<Self, MetricError> {
        if predictions.len() != labels.len() {
            return Err(MetricError::LengthMismatch(predictions.len(), labels.len()));
        }
        let mut c = Confusion::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn precision_recall(&self) -> PrecisionRecall {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, true)
            } else {
                (num as f64 / den as f64, false)
            }
        };
        let (precision, precision_degenerate) = ratio(self.tp, self.tp + self.fp);
        let (recall, recall_degenerate) = ratio(self.tp, self.tp + self.fn_);
        PrecisionRecall {
            precision,
            recall,
            precision_degenerate,
            recall_degenerate,
        }
    }
}

/// Precision and recall; a zero denominator yields 0.0 and sets the flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
}

pub fn precision_recall(predictions: &[bool], labels: &[bool]) -> Result<PrecisionRecall, MetricError> {
    Ok(Confusion::from_predictions(predictions, labels)?.precision_recall())
}
