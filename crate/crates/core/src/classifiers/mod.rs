//! Learners that pick a triage approach from a report's meta-features.
//!
//! Four classifier families share one pipeline: features are standardized
//! with training-set statistics (constant dimensions dropped), models train
//! deterministically from an explicit seed, and prediction ties always fall
//! back to the lowest class index (FREQ, then TEXTSIM, then L2R).

mod bayes;
mod forest;
mod grid;
mod logistic;
mod report;
mod tree;

pub use grid::{
    chronological_folds, default_grid, grid_search_chronological, GridSearchOutcome, GRID_FOLDS,
};
pub use report::{classification_report, ClassMetrics, ClassificationReport};

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalkit::Approach;
use crate::metafeatures::{MetaFeatureVector, META_FEATURE_COUNT};

pub const N_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ClassifierKind {
    Dt,
    Nb,
    Lr,
    Rf,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Dt,
        ClassifierKind::Nb,
        ClassifierKind::Lr,
        ClassifierKind::Rf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Dt => "DT",
            ClassifierKind::Nb => "NB",
            ClassifierKind::Lr => "LR",
            ClassifierKind::Rf => "RF",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DT" => Ok(ClassifierKind::Dt),
            "NB" => Ok(ClassifierKind::Nb),
            "LR" => Ok(ClassifierKind::Lr),
            "RF" => Ok(ClassifierKind::Rf),
            other => Err(format!("unknown classifier kind: {other}")),
        }
    }
}

/// One bag of knobs for all learners; each kind reads only its own fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Tree depth cap; `None` means unlimited.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Forest size.
    pub trees: usize,
    /// Bootstrap-resample each tree's training rows.
    pub bootstrap: bool,
    /// Subsample ceil(sqrt(d)) candidate dimensions per split.
    pub feature_subsample: bool,
    pub learning_rate: f64,
    /// L2 penalty weight for logistic regression.
    pub l2: f64,
    pub epochs: usize,
    /// Variance floor for naive Bayes.
    pub var_floor: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            max_depth: None,
            min_samples_leaf: 1,
            trees: 100,
            bootstrap: true,
            feature_subsample: true,
            learning_rate: 0.1,
            l2: 0.0,
            epochs: 300,
            var_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledExample {
    pub report_id: String,
    pub features: MetaFeatureVector,
    pub label: Approach,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyInput,
    #[error("training set holds a single label; need at least two")]
    SingleLabel,
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("need at least {minimum} examples for chronological folds, got {got}")]
    TooFewExamples { minimum: usize, got: usize },
    #[error("{predictions} predictions against {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
}

/// Per-dimension z-scoring fitted on the training rows. Dimensions whose
/// population standard deviation is (numerically) zero carry no signal and
/// are dropped from the transformed space.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
    keep: Vec<usize>,
}

impl Standardizer {
    fn fit(rows: &[[f64; META_FEATURE_COUNT]]) -> Self {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; META_FEATURE_COUNT];
        for row in rows {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for acc in &mut mean {
            *acc /= n;
        }
        let mut std = vec![0.0; META_FEATURE_COUNT];
        for row in rows {
            for ((acc, v), mu) in std.iter_mut().zip(row).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        let mut keep = Vec::new();
        for (dim, acc) in std.iter_mut().enumerate() {
            *acc = (*acc / n).sqrt();
            if *acc > 1e-12 {
                keep.push(dim);
            }
        }
        Standardizer { mean, std, keep }
    }

    fn transform(&self, row: &[f64; META_FEATURE_COUNT]) -> Vec<f64> {
        self.keep
            .iter()
            .map(|&d| (row[d] - self.mean[d]) / self.std[d])
            .collect()
    }
}

#[derive(Debug, Clone)]
enum ModelInner {
    Tree(tree::TreeNode),
    Bayes(bayes::NbModel),
    Logistic(logistic::LrModel),
    Forest(Vec<tree::TreeNode>),
}

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    kind: ClassifierKind,
    hyperparams: Hyperparams,
    seed: u64,
    standardizer: Standardizer,
    inner: ModelInner,
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Training objective per epoch; populated for LR only.
    pub fn epoch_losses(&self) -> Option<&[f64]> {
        match &self.inner {
            ModelInner::Logistic(m) => Some(&m.epoch_losses),
            _ => None,
        }
    }

    pub fn predict(&self, features: &MetaFeatureVector) -> Approach {
        let row = self.standardizer.transform(&features.to_array());
        let class = match &self.inner {
            ModelInner::Tree(t) => t.predict(&row),
            ModelInner::Bayes(m) => bayes::predict(m, &row),
            ModelInner::Logistic(m) => logistic::predict(m, &row),
            ModelInner::Forest(trees) => forest::predict(trees, N_CLASSES, &row),
        };
        Approach::from_class_index(class).expect("class index within the three approaches")
    }
}

pub fn train_classifier(
    kind: ClassifierKind,
    examples: &[LabeledExample],
    hyperparams: &Hyperparams,
    seed: u64,
) -> Result<ClassifierModel, ClassifierError> {
    if examples.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    validate(kind, hyperparams)?;
    let labels: Vec<usize> = examples.iter().map(|e| e.label.class_index()).collect();
    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(ClassifierError::SingleLabel);
    }
    let raw: Vec<[f64; META_FEATURE_COUNT]> =
        examples.iter().map(|e| e.features.to_array()).collect();
    let standardizer = Standardizer::fit(&raw);
    let rows: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.transform(r)).collect();
    let inner = match kind {
        ClassifierKind::Dt => {
            let params = tree::TreeParams {
                max_depth: hyperparams.max_depth,
                min_samples_leaf: hyperparams.min_samples_leaf,
                feature_subsample: None,
            };
            let idx: Vec<usize> = (0..rows.len()).collect();
            ModelInner::Tree(tree::grow(&rows, &labels, &idx, &params, None))
        }
        ClassifierKind::Nb => ModelInner::Bayes(bayes::train(
            &rows,
            &labels,
            N_CLASSES,
            hyperparams.var_floor,
        )),
        ClassifierKind::Lr => ModelInner::Logistic(logistic::train(
            &rows,
            &labels,
            N_CLASSES,
            hyperparams.learning_rate,
            hyperparams.l2,
            hyperparams.epochs,
        )),
        ClassifierKind::Rf => ModelInner::Forest(forest::train(&rows, &labels, hyperparams, seed)),
    };
    Ok(ClassifierModel {
        kind,
        hyperparams: *hyperparams,
        seed,
        standardizer,
        inner,
    })
}

fn validate(kind: ClassifierKind, hp: &Hyperparams) -> Result<(), ClassifierError> {
    let invalid = |msg: &str| Err(ClassifierError::InvalidHyperparams(msg.to_string()));
    match kind {
        ClassifierKind::Dt | ClassifierKind::Rf => {
            if hp.min_samples_leaf == 0 {
                return invalid("min_samples_leaf must be at least 1");
            }
            if kind == ClassifierKind::Rf && hp.trees == 0 {
                return invalid("a forest needs at least one tree");
            }
        }
        ClassifierKind::Lr => {
            if !(hp.learning_rate > 0.0 && hp.learning_rate.is_finite()) {
                return invalid("learning_rate must be positive and finite");
            }
        }
        ClassifierKind::Nb => {
            if !(hp.var_floor > 0.0) {
                return invalid("var_floor must be positive");
            }
        }
    }
    Ok(())
}
