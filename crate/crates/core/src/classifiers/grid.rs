//! Hyperparameter selection on chronologically ordered examples.

use std::ops::Range;

use super::report::classification_report;
use super::{train_classifier, ClassifierError, ClassifierKind, Hyperparams, LabeledExample};

pub const GRID_FOLDS: usize = 5;

/// Contiguous index ranges of `k` chronological folds over `n` items; when
/// `n` is not divisible by `k`, the leftover items go to the earliest folds.
pub fn chronological_folds(n: usize, k: usize) -> Vec<Range<usize>> {
    assert!(k >= 1, "need at least one fold");
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        folds.push(start..start + len);
        start += len;
    }
    folds
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    pub best: Hyperparams,
    pub best_index: usize,
    pub best_score: f64,
    /// Mean validation weighted F1 per grid point, in enumeration order.
    pub scores: Vec<f64>,
}

/// Walks the grid over five chronological folds: round `x` trains on folds
/// `1..=x` and validates on fold `x+1`, scoring weighted F1. A round whose
/// training slice holds a single label scores zero. The best mean wins;
/// equal means keep the earliest grid point.
pub fn grid_search_chronological(
    kind: ClassifierKind,
    examples: &[LabeledExample],
    grid: &[Hyperparams],
    seed: u64,
) -> Result<GridSearchOutcome, ClassifierError> {
    if grid.is_empty() {
        return Err(ClassifierError::EmptyGrid);
    }
    if examples.len() < GRID_FOLDS {
        return Err(ClassifierError::TooFewExamples {
            minimum: GRID_FOLDS,
            got: examples.len(),
        });
    }
    assert!(
        examples
            .windows(2)
            .all(|w| w[0].created_at <= w[1].created_at),
        "grid search expects chronologically sorted examples"
    );
    let folds = chronological_folds(examples.len(), GRID_FOLDS);
    let mut scores = Vec::with_capacity(grid.len());
    for hp in grid {
        let mut total = 0.0;
        for validate in folds.iter().skip(1) {
            let train = &examples[..validate.start];
            let model = match train_classifier(kind, train, hp, seed) {
                Ok(model) => model,
                Err(ClassifierError::SingleLabel) => continue,
                Err(other) => return Err(other),
            };
            let held_out = &examples[validate.clone()];
            let predictions: Vec<_> = held_out.iter().map(|e| model.predict(&e.features)).collect();
            let labels: Vec<_> = held_out.iter().map(|e| e.label).collect();
            total += classification_report(&predictions, &labels)?.weighted_f1;
        }
        scores.push(total / (GRID_FOLDS - 1) as f64);
    }
    let mut best_index = 0;
    for (i, &score) in scores.iter().enumerate() {
        if score > scores[best_index] {
            best_index = i;
        }
    }
    Ok(GridSearchOutcome {
        best: grid[best_index],
        best_index,
        best_score: scores[best_index],
        scores,
    })
}

/// The stock search space for each learner.
pub fn default_grid(kind: ClassifierKind) -> Vec<Hyperparams> {
    let depths = [Some(3), Some(5), Some(8), None];
    let leaf_sizes = [1, 5];
    match kind {
        ClassifierKind::Dt => {
            let mut grid = Vec::new();
            for max_depth in depths {
                for min_samples_leaf in leaf_sizes {
                    grid.push(Hyperparams {
                        max_depth,
                        min_samples_leaf,
                        ..Hyperparams::default()
                    });
                }
            }
            grid
        }
        ClassifierKind::Rf => {
            let mut grid = Vec::new();
            for max_depth in depths {
                for min_samples_leaf in leaf_sizes {
                    for trees in [50, 100] {
                        grid.push(Hyperparams {
                            max_depth,
                            min_samples_leaf,
                            trees,
                            ..Hyperparams::default()
                        });
                    }
                }
            }
            grid
        }
        ClassifierKind::Lr => {
            let mut grid = Vec::new();
            for learning_rate in [0.1, 0.01] {
                for l2 in [0.0, 1e-3] {
                    grid.push(Hyperparams {
                        learning_rate,
                        l2,
                        epochs: 300,
                        ..Hyperparams::default()
                    });
                }
            }
            grid
        }
        ClassifierKind::Nb => vec![Hyperparams::default()],
    }
}

#[cfg(test)]
mod tests {
    use chrono::{DateTime, TimeZone, Utc};

    use super::*;
    use crate::evalkit::Approach;
    use crate::metafeatures::{MetaFeatureVector, META_FEATURE_COUNT};

    fn when(minute: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 3, 1, 12, minute, 0).unwrap()
    }

    fn example(i: usize, dim0: f64, label: Approach) -> LabeledExample {
        let mut values = [0.0; META_FEATURE_COUNT];
        values[0] = dim0;
        LabeledExample {
            report_id: format!("r{i}"),
            features: MetaFeatureVector::from_array(values),
            label,
            created_at: when(i as u32),
        }
    }

    /// Three bands over dim 0: a single split cannot carve out the middle.
    fn banded(copies: usize) -> Vec<LabeledExample> {
        let mut out = Vec::new();
        for j in 0..copies {
            let jitter = j as f64 * 0.01;
            out.push(example(3 * j, -3.0 + jitter, Approach::Freq));
            out.push(example(3 * j + 1, jitter, Approach::Textsim));
            out.push(example(3 * j + 2, 3.0 + jitter, Approach::Freq));
        }
        out.sort_by_key(|e| e.created_at);
        out
    }

    #[test]
    fn remainder_lands_in_the_earliest_folds() {
        assert_eq!(
            chronological_folds(10, 5),
            vec![0..2, 2..4, 4..6, 6..8, 8..10]
        );
        assert_eq!(
            chronological_folds(12, 5),
            vec![0..3, 3..6, 6..8, 8..10, 10..12]
        );
        assert_eq!(
            chronological_folds(23, 5),
            vec![0..5, 5..10, 10..15, 15..19, 19..23]
        );
        assert_eq!(chronological_folds(3, 5).len(), 5);
    }

    #[test]
    fn deeper_tree_wins_when_a_stump_cannot_fit() {
        let examples = banded(7);
        let stump = Hyperparams {
            max_depth: Some(1),
            ..Hyperparams::default()
        };
        let deep = Hyperparams {
            max_depth: Some(3),
            ..Hyperparams::default()
        };
        let outcome =
            grid_search_chronological(ClassifierKind::Dt, &examples, &[stump, deep], 0)
                .expect("two grid points");
        assert_eq!(outcome.best_index, 1);
        assert_eq!(outcome.best, deep);
        assert!(outcome.scores[1] > outcome.scores[0]);
    }

    #[test]
    fn equal_scores_keep_the_first_grid_point() {
        let examples = banded(4);
        let hp = Hyperparams {
            max_depth: Some(4),
            ..Hyperparams::default()
        };
        let outcome = grid_search_chronological(ClassifierKind::Dt, &examples, &[hp, hp], 0)
            .expect("duplicate grid points");
        assert_eq!(outcome.scores[0], outcome.scores[1]);
        assert_eq!(outcome.best_index, 0);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let examples = banded(3);
        let err = grid_search_chronological(ClassifierKind::Dt, &examples, &[], 0).unwrap_err();
        assert!(matches!(err, ClassifierError::EmptyGrid));
    }

    #[test]
    fn too_few_examples_are_rejected() {
        let examples = banded(1);
        let grid = [Hyperparams::default()];
        let err = grid_search_chronological(ClassifierKind::Dt, &examples, &grid, 0).unwrap_err();
        assert!(matches!(
            err,
            ClassifierError::TooFewExamples { minimum: 5, got: 3 }
        ));
    }

    #[test]
    fn single_label_training_rounds_score_zero_instead_of_failing() {
        // First two folds are all FREQ, so round one trains on one label.
        let mut examples: Vec<LabeledExample> =
            (0..4).map(|i| example(i, i as f64, Approach::Freq)).collect();
        examples.extend([
            example(4, 10.0, Approach::Textsim),
            example(5, 0.5, Approach::Freq),
            example(6, 11.0, Approach::Textsim),
            example(7, 1.5, Approach::Freq),
            example(8, 12.0, Approach::Textsim),
            example(9, 2.5, Approach::Freq),
        ]);
        let outcome = grid_search_chronological(
            ClassifierKind::Dt,
            &examples,
            &[Hyperparams::default()],
            0,
        )
        .expect("degenerate early folds are tolerated");
        assert!(outcome.best_score >= 0.0);
    }

    #[test]
    fn stock_grids_have_the_advertised_shapes() {
        assert_eq!(default_grid(ClassifierKind::Dt).len(), 8);
        assert_eq!(default_grid(ClassifierKind::Rf).len(), 16);
        assert_eq!(default_grid(ClassifierKind::Lr).len(), 4);
        assert_eq!(default_grid(ClassifierKind::Nb).len(), 1);
        assert!(default_grid(ClassifierKind::Dt)
            .iter()
            .any(|hp| hp.max_depth.is_none()));
        assert!(default_grid(ClassifierKind::Lr)
            .iter()
            .all(|hp| hp.epochs == 300));
    }
}
