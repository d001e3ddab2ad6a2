//! Random forest: bagged CART trees with per-split feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{self, majority, TreeNode, TreeParams};
use super::Hyperparams;

/// Trains `hp.trees` trees. Each tree draws a bootstrap sample (when
/// enabled) and then considers ceil(sqrt(d)) candidate dimensions per split
/// (when subsampling is enabled), both from its own seeded generator, so
/// the forest is reproducible independent of scheduling.
pub(crate) fn train(
    rows: &[Vec<f64>],
    labels: &[usize],
    hp: &Hyperparams,
    seed: u64,
) -> Vec<TreeNode> {
    let dims = rows.first().map_or(0, Vec::len);
    let per_split = (dims as f64).sqrt().ceil() as usize;
    let all: Vec<usize> = (0..rows.len()).collect();
    (0..hp.trees)
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, index));
            let idx: Vec<usize> = if hp.bootstrap {
                (0..rows.len()).map(|_| rng.gen_range(0..rows.len())).collect()
            } else {
                all.clone()
            };
            let params = TreeParams {
                max_depth: hp.max_depth,
                min_samples_leaf: hp.min_samples_leaf,
                feature_subsample: hp.feature_subsample.then_some(per_split.max(1)),
            };
            let rng = hp.feature_subsample.then_some(&mut rng);
            tree::grow(rows, labels, &idx, &params, rng)
        })
        .collect()
}

/// Majority vote over the trees; vote ties go to the lowest class index.
pub(crate) fn predict(trees: &[TreeNode], n_classes: usize, row: &[f64]) -> usize {
    let mut votes = vec![0usize; n_classes];
    for tree in trees {
        votes[tree.predict(row)] += 1;
    }
    majority(&votes)
}

fn tree_seed(master: u64, index: usize) -> u64 {
    master ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
