//! Precision, recall and F1 over rare events.
//!
//! A case is a true event when its observed target is rare under the
//! relevance function and a predicted event when its prediction is. Scores
//! are `None` when their denominator is empty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relevance::RelevanceFn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegScores {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub n_rare_true: usize,
    pub n_rare_pred: usize,
}

impl RegScores {
    /// Scores from event indicators.
    pub fn from_events(truth: &[bool], predicted: &[bool]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: predicted.len(),
            });
        }
        let n_rare_true = truth.iter().filter(|&&t| t).count();
        let n_rare_pred = predicted.iter().filter(|&&p| p).count();
        let hits = truth.iter().zip(predicted).filter(|(&t, &p)| t && p).count();
        let ratio = |d: usize| (d > 0).then(|| hits as f64 / d as f64);
        let precision = ratio(n_rare_pred);
        let recall = ratio(n_rare_true);
        Ok(Self {
            precision,
            recall,
            f1: f1(precision, recall),
            n_rare_true,
            n_rare_pred,
        })
    }
}

/// Harmonic mean; `None` if either side is undefined, 0 when both are 0.
pub fn f1(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    let (p, r) = (precision?, recall?);
    Some(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 })
}

pub fn utility_prf(y_true: &[f64], y_pred: &[f64], rel: &RelevanceFn) -> Result<RegScores> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let truth: Vec<bool> = y_true.iter().map(|&y| rel.is_rare(y)).collect();
    let pred: Vec<bool> = y_pred.iter().map(|&y| rel.is_rare(y)).collect();
    RegScores::from_events(&truth, &pred)
}

/// Mean over the defined values with the number of undefined ones dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mean {
    pub value: Option<f64>,
    pub n_defined: usize,
    pub n_dropped: usize,
}

impl Mean {
    pub fn of<I: IntoIterator<Item = Option<f64>>>(values: I) -> Self {
        let (mut sum, mut n_defined, mut n_dropped) = (0.0, 0usize, 0usize);
        for v in values {
            match v {
                Some(x) => {
                    sum += x;
                    n_defined += 1;
                }
                None => n_dropped += 1,
            }
        }
        Self {
            value: (n_defined > 0).then(|| sum / n_defined as f64),
            n_defined,
            n_dropped,
        }
    }
}

/// Per-repetition scores averaged over the repetitions where each is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegAggregate {
    pub precision: Mean,
    pub recall: Mean,
    pub f1: Mean,
}

impl RegAggregate {
    pub fn of(scores: &[RegScores]) -> Self {
        Self {
            precision: Mean::of(scores.iter().map(|s| s.precision)),
            recall: Mean::of(scores.iter().map(|s| s.recall)),
            f1: Mean::of(scores.iter().map(|s| s.f1)),
        }
    }
}
