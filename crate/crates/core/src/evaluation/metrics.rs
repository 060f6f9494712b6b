//! Confusion counts, per-class scores and Cohen's kappa.

use log::debug;
use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::corpus::Label;

/// Counts with Useful as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// The same matrix with NotUseful as the positive class.
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix, EvaluationError> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(EvaluationError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (Label::Useful, Label::Useful) => cm.tp += 1,
            (Label::NotUseful, Label::Useful) => cm.fp += 1,
            (Label::Useful, Label::NotUseful) => cm.fn_ += 1,
            (Label::NotUseful, Label::NotUseful) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// 0/0 is scored as 0.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        debug!("0/0 metric set to 0");
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_metrics(cm: &ConfusionMatrix, positive: Label) -> ClassMetrics {
    let cm = match positive {
        Label::Useful => *cm,
        Label::NotUseful => cm.swapped(),
    };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        debug!("0/0 f1 set to 0");
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
    }
}

/// `(p_o - p_e) / (1 - p_e)` with chance agreement from the two marginals.
/// Returns 1.0 when both agreements are perfect and 0.0 for the remaining
/// `p_e = 1` case.
pub fn cohen_kappa(a: &[Label], b: &[Label]) -> Result<f64, EvaluationError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(EvaluationError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;
    let share = |v: &[Label]| v.iter().filter(|l| **l == Label::Useful).count() as f64 / n;
    let (ua, ub) = (share(a), share(b));
    let p_e = ua * ub + (1.0 - ua) * (1.0 - ub);
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(if p_o == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
