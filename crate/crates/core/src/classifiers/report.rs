//! Confusion matrix and precision/recall/F1 summaries for approach labels.

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::evalkit::Approach;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub approach: String,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// `confusion[t][p]` counts true class `t` predicted as class `p`,
    /// in FREQ, TEXTSIM, L2R order; row sums equal class supports.
    pub confusion: [[usize; 3]; 3],
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub total: usize,
}

impl ClassificationReport {
    pub fn class(&self, approach: Approach) -> &ClassMetrics {
        &self.per_class[approach.class_index()]
    }
}

/// Per-class precision, recall and F1 with undefined ratios scored as zero,
/// plus support-weighted averages. Weighted recall always equals accuracy.
pub fn classification_report(
    predictions: &[Approach],
    labels: &[Approach],
) -> Result<ClassificationReport, ClassifierError> {
    if predictions.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    let mut confusion = [[0usize; 3]; 3];
    for (p, l) in predictions.iter().zip(labels) {
        confusion[l.class_index()][p.class_index()] += 1;
    }
    let total = labels.len();
    let mut per_class = Vec::with_capacity(3);
    let mut weighted_precision = 0.0;
    let mut weighted_recall = 0.0;
    let mut weighted_f1 = 0.0;
    let mut correct = 0;
    for class in 0..3 {
        let tp = confusion[class][class];
        let support: usize = confusion[class].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[class]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let weight = support as f64 / total as f64;
        weighted_precision += weight * precision;
        weighted_recall += weight * recall;
        weighted_f1 += weight * f1;
        correct += tp;
        per_class.push(ClassMetrics {
            approach: Approach::from_class_index(class)
                .expect("three classes")
                .name()
                .to_string(),
            support,
            precision,
            recall,
            f1,
        });
    }
    Ok(ClassificationReport {
        confusion,
        per_class,
        accuracy: correct as f64 / total as f64,
        weighted_precision,
        weighted_recall,
        weighted_f1,
        total,
    })
}

fn ratio(numerator: usize, denominator: usize) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}
