//! CART decision trees with Gini impurity, shared by the DT and RF learners.

use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub(crate) enum TreeNode {
    Leaf {
        class: usize,
    },
    Split {
        dim: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub(crate) fn predict(&self, row: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*dim] <= *threshold { left } else { right };
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    #[cfg(test)]
    pub(crate) fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

pub(crate) struct TreeParams {
    /// `None` grows until nodes are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate dimensions drawn per split; `None` considers every dimension.
    pub feature_subsample: Option<usize>,
}

/// Grows a tree over `idx` rows. Candidate thresholds are midpoints of
/// consecutive distinct values; the split minimizing weighted Gini wins,
/// ties going to the lowest dimension and then the lowest threshold.
/// Pure nodes become leaves immediately, whatever the depth budget.
pub(crate) fn grow(
    rows: &[Vec<f64>],
    labels: &[usize],
    idx: &[usize],
    params: &TreeParams,
    rng: Option<&mut ChaCha8Rng>,
) -> TreeNode {
    debug_assert!(!idx.is_empty(), "tree nodes need at least one row");
    let n_classes = labels.iter().max().map_or(1, |m| m + 1);
    let mut grower = Grower {
        rows,
        labels,
        params,
        rng,
        dims: rows.first().map_or(0, Vec::len),
        n_classes,
    };
    grower.node(idx, 0)
}

pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (class, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = class;
        }
    }
    best
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    params: &'a TreeParams,
    rng: Option<&'a mut ChaCha8Rng>,
    dims: usize,
    n_classes: usize,
}

impl Grower<'_> {
    fn node(&mut self, idx: &[usize], depth: usize) -> TreeNode {
        let counts = self.class_counts(idx);
        if counts.iter().filter(|&&c| c > 0).count() <= 1 {
            return TreeNode::Leaf {
                class: majority(&counts),
            };
        }
        if self.params.max_depth.is_some_and(|d| depth >= d) {
            return TreeNode::Leaf {
                class: majority(&counts),
            };
        }
        let Some((dim, threshold)) = self.best_split(idx, &counts) else {
            return TreeNode::Leaf {
                class: majority(&counts),
            };
        };
        let mut left_idx = Vec::new();
        let mut right_idx = Vec::new();
        for &i in idx {
            if self.rows[i][dim] <= threshold {
                left_idx.push(i);
            } else {
                right_idx.push(i);
            }
        }
        let left = self.node(&left_idx, depth + 1);
        let right = self.node(&right_idx, depth + 1);
        TreeNode::Split {
            dim,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    fn candidate_dims(&mut self) -> Vec<usize> {
        if let (Some(k), Some(rng)) = (self.params.feature_subsample, self.rng.as_deref_mut()) {
            if k < self.dims {
                let mut dims = rand::seq::index::sample(rng, self.dims, k).into_vec();
                dims.sort_unstable();
                return dims;
            }
        }
        (0..self.dims).collect()
    }

    fn best_split(&mut self, idx: &[usize], totals: &[usize]) -> Option<(usize, f64)> {
        let msl = self.params.min_samples_leaf;
        if idx.len() < 2 * msl {
            return None;
        }
        let n = idx.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for dim in self.candidate_dims() {
            let mut order: Vec<usize> = idx.to_vec();
            order.sort_by(|&a, &b| self.rows[a][dim].total_cmp(&self.rows[b][dim]));
            let mut left = vec![0usize; self.n_classes];
            for boundary in 0..order.len() - 1 {
                left[self.labels[order[boundary]]] += 1;
                let a = self.rows[order[boundary]][dim];
                let b = self.rows[order[boundary + 1]][dim];
                if a == b {
                    continue;
                }
                let n_left = boundary + 1;
                let n_right = order.len() - n_left;
                if n_left < msl || n_right < msl {
                    continue;
                }
                let gini_left = gini(&left, n_left as f64);
                let right: Vec<usize> = totals.iter().zip(&left).map(|(t, l)| t - l).collect();
                let gini_right = gini(&right, n_right as f64);
                let weighted = (n_left as f64 * gini_left + n_right as f64 * gini_right) / n;
                // Midpoints can round up onto `b`; fall back to `a` so the
                // `<=` walk keeps both sides non-empty.
                let mut threshold = (a + b) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                if best.is_none_or(|(w, _, _)| weighted + 1e-12 < w) {
                    best = Some((weighted, dim, threshold));
                }
            }
        }
        best.map(|(_, dim, threshold)| (dim, threshold))
    }
}

fn gini(counts: &[usize], n: f64) -> f64 {
    let mut impurity = 1.0;
    for &c in counts {
        let p = c as f64 / n;
        impurity -= p * p;
    }
    impurity
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;

    use super::*;

    fn rows_1d(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    fn all_params() -> TreeParams {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: None,
        }
    }

    fn fit_and_recall(rows: &[Vec<f64>], labels: &[usize], params: &TreeParams) -> TreeNode {
        let idx: Vec<usize> = (0..rows.len()).collect();
        grow(rows, labels, &idx, params, None)
    }

    #[test]
    fn perfectly_separated_classes_stop_at_depth_one() {
        let rows = rows_1d(&[-2.0, -1.5, -1.0, 1.0, 1.5, 2.0]);
        let labels = [0, 0, 0, 1, 1, 1];
        let tree = fit_and_recall(&rows, &labels, &all_params());
        assert_eq!(tree.depth(), 1, "pure children must not be split further");
        assert_eq!(tree.leaves(), 2);
        assert_eq!(tree.predict(&[-1.7]), 0);
        assert_eq!(tree.predict(&[1.2]), 1);
    }

    #[test]
    fn threshold_is_the_midpoint_of_the_boundary_pair() {
        let rows = rows_1d(&[0.0, 2.0, 10.0, 12.0]);
        let labels = [0, 0, 1, 1];
        let tree = fit_and_recall(&rows, &labels, &all_params());
        match tree {
            TreeNode::Split { dim, threshold, .. } => {
                assert_eq!(dim, 0);
                assert!((threshold - 6.0).abs() < 1e-12);
            }
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn tie_between_dimensions_prefers_the_lower_one() {
        // Both dimensions separate the classes identically.
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        ];
        let labels = [0, 0, 1, 1];
        let tree = fit_and_recall(&rows, &labels, &all_params());
        match tree {
            TreeNode::Split { dim, .. } => assert_eq!(dim, 0),
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn min_samples_leaf_blocks_lopsided_splits() {
        let rows = rows_1d(&[0.0, 1.0, 2.0]);
        let labels = [1, 0, 0];
        let params = TreeParams {
            max_depth: None,
            min_samples_leaf: 2,
            feature_subsample: None,
        };
        // Every boundary strands fewer than two rows on one side, so no
        // split survives and the node stays a majority leaf.
        let tree = fit_and_recall(&rows, &labels, &params);
        match tree {
            TreeNode::Leaf { class } => assert_eq!(class, 0),
            TreeNode::Split { .. } => panic!("split violates min_samples_leaf"),
        }
    }

    #[test]
    fn depth_limit_yields_majority_leaves() {
        let rows = rows_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let labels = [0, 0, 1, 1, 1, 0];
        let params = TreeParams {
            max_depth: Some(1),
            min_samples_leaf: 1,
            feature_subsample: None,
        };
        let tree = fit_and_recall(&rows, &labels, &params);
        assert!(tree.depth() <= 1);
    }

    #[test]
    fn majority_breaks_ties_toward_the_lowest_class() {
        assert_eq!(majority(&[2, 2, 1]), 0);
        assert_eq!(majority(&[0, 3, 3]), 1);
        assert_eq!(majority(&[1, 4, 2]), 1);
    }

    #[test]
    fn subsampled_growth_is_deterministic_per_seed() {
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|i| vec![(i % 7) as f64, (i % 5) as f64, (i % 3) as f64])
            .collect();
        let labels: Vec<usize> = (0..24).map(|i| usize::from(i % 7 > 3)).collect();
        let idx: Vec<usize> = (0..rows.len()).collect();
        let params = TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: Some(1),
        };
        let grow_once = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tree = grow(&rows, &labels, &idx, &params, Some(&mut rng));
            let probe: Vec<usize> = rows.iter().map(|r| tree.predict(r)).collect();
            probe
        };
        assert_eq!(grow_once(11), grow_once(11));
    }

    proptest! {
        #[test]
        fn unlimited_tree_memorizes_distinct_rows(
            labels in proptest::collection::vec(0usize..3, 2..40),
        ) {
            prop_assume!(labels.iter().any(|&l| l != labels[0]));
            let rows = rows_1d(&labels.iter().enumerate().map(|(i, _)| i as f64).collect::<Vec<_>>());
            let tree = fit_and_recall(&rows, &labels, &all_params());
            for (row, &label) in rows.iter().zip(&labels) {
                prop_assert_eq!(tree.predict(row), label);
            }
        }

        #[test]
        fn every_leaf_class_is_a_training_class(
            values in proptest::collection::vec(-50.0f64..50.0, 4..30),
            seed in 0u64..200,
        ) {
            let labels: Vec<usize> = (0..values.len()).map(|i| i % 2).collect();
            let rows = rows_1d(&values);
            let idx: Vec<usize> = (0..rows.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = TreeParams {
                max_depth: Some(3),
                min_samples_leaf: 1,
                feature_subsample: Some(1),
            };
            let tree = grow(&rows, &labels, &idx, &params, Some(&mut rng));
            for row in &rows {
                prop_assert!(tree.predict(row) < 2);
            }
        }
    }
}
