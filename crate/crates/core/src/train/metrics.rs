//! Confusion matrices and support-weighted F1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision, recall, and F1 for one class. `support` is the number of
/// evaluated examples whose true class this is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Evaluation summary over one example set. `confusion[t][p]` counts
/// examples of true class `t` predicted as class `p`; rows are true classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_f1: f64,
    pub total: usize,
}

impl MetricsReport {
    /// Fraction of evaluated examples on the confusion diagonal.
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let hits: usize = (0..self.labels.len()).map(|c| self.confusion[c][c]).sum();
        hits as f64 / self.total as f64
    }
}

/// Count a K x K confusion matrix from aligned true/predicted class indices.
pub fn confusion_matrix(
    truth: &[usize],
    predicted: &[usize],
    classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if truth.len() != predicted.len() {
        return Err(Error::Argument(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if classes == 0 {
        return Err(Error::Argument("confusion matrix needs at least one class".into()));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (i, (&t, &p)) in truth.iter().zip(predicted.iter()).enumerate() {
        if t >= classes || p >= classes {
            return Err(Error::Argument(format!(
                "example {i}: class index out of range (true {t}, predicted {p}, {classes} classes)"
            )));
        }
        confusion[t][p] += 1;
    }
    Ok(confusion)
}

fn check_square(confusion: &[Vec<usize>]) -> Result<usize> {
    let k = confusion.len();
    if k == 0 {
        return Err(Error::Argument("empty confusion matrix".into()));
    }
    for row in confusion {
        if row.len() != k {
            return Err(Error::Shape(format!(
                "confusion matrix row of length {} in a {k}-class matrix",
                row.len()
            )));
        }
    }
    Ok(k)
}

/// Per-class precision/recall/F1 from a confusion matrix. Undefined ratios
/// (zero denominator) score 0, so a class never predicted and never seen
/// contributes nothing.
pub fn per_class_metrics(confusion: &[Vec<usize>]) -> Result<Vec<ClassMetrics>> {
    let k = check_square(confusion)?;
    let mut out = Vec::with_capacity(k);
    for (c, row) in confusion.iter().enumerate() {
        let tp = row[c];
        let support: usize = row.iter().sum();
        let predicted: usize = (0..k).map(|t| confusion[t][c]).sum();
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        out.push(ClassMetrics { precision, recall, f1, support });
    }
    Ok(out)
}

/// Support-weighted mean of per-class F1: sum_c support_c * F1_c / total.
pub fn weighted_f1(confusion: &[Vec<usize>]) -> Result<f64> {
    let per_class = per_class_metrics(confusion)?;
    let total: usize = per_class.iter().map(|m| m.support).sum();
    if total == 0 {
        return Err(Error::Argument("confusion matrix has no counted examples".into()));
    }
    let weighted: f64 = per_class
        .iter()
        .map(|m| m.support as f64 * m.f1)
        .sum();
    Ok(weighted / total as f64)
}

/// Full report from aligned true/predicted indices and the class names they
/// index into.
pub fn metrics_report(
    truth: &[usize],
    predicted: &[usize],
    labels: &[String],
) -> Result<MetricsReport> {
    let confusion = confusion_matrix(truth, predicted, labels.len())?;
    let per_class = per_class_metrics(&confusion)?;
    let weighted = weighted_f1(&confusion)?;
    Ok(MetricsReport {
        labels: labels.to_vec(),
        confusion,
        per_class,
        weighted_f1: weighted,
        total: truth.len(),
    })
}
