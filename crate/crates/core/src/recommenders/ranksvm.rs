//! Pairwise linear rank learner (RankSVM-style, hinge loss + L2).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recommenders::FEATURE_COUNT;

/// One (query, developer) training example.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTuple {
    pub query_id: String,
    pub features: [f64; FEATURE_COUNT],
    pub relevant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub regularization: f64,
    pub seed: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            learning_rate: 0.01,
            epochs: 50,
            regularization: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRankModel {
    pub weights: [f64; FEATURE_COUNT],
    pub config: RankConfig,
    /// Full objective (mean hinge + L2 penalty) after each epoch.
    pub epoch_losses: Vec<f64>,
}

impl LinearRankModel {
    pub fn with_weights(weights: [f64; FEATURE_COUNT]) -> Self {
        LinearRankModel {
            weights,
            config: RankConfig::default(),
            epoch_losses: Vec::new(),
        }
    }

    pub fn score(&self, features: &[f64; FEATURE_COUNT]) -> f64 {
        dot(&self.weights, features)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("no query provides both a relevant and a non-relevant tuple")]
    NoValidPairs,
}

fn dot(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes sum of max(0, 1 - w·(x+ - x-)) over within-query pairs plus
/// an L2 penalty, by seeded stochastic subgradient descent from zero
/// weights.
pub fn ranksvm_train(tuples: &[RankTuple], cfg: &RankConfig) -> Result<LinearRankModel, RankError> {
    // pair differences x+ - x-, grouped within each query
    let mut diffs: Vec<[f64; FEATURE_COUNT]> = Vec::new();
    let mut by_query: Vec<(&str, Vec<&RankTuple>)> = Vec::new();
    for t in tuples {
        match by_query.iter_mut().find(|(q, _)| *q == t.query_id) {
            Some((_, group)) => group.push(t),
            None => by_query.push((&t.query_id, vec![t])),
        }
    }
    for (_, group) in &by_query {
        for pos in group.iter().filter(|t| t.relevant) {
            for neg in group.iter().filter(|t| !t.relevant) {
                let mut d = [0.0; FEATURE_COUNT];
                for i in 0..FEATURE_COUNT {
                    d[i] = pos.features[i] - neg.features[i];
                }
                diffs.push(d);
            }
        }
    }
    if diffs.is_empty() {
        return Err(RankError::NoValidPairs);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = [0.0; FEATURE_COUNT];
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let decay = 1.0 - 2.0 * cfg.learning_rate * cfg.regularization;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &pi in &order {
            let d = &diffs[pi];
            if dot(&w, d) < 1.0 {
                for i in 0..FEATURE_COUNT {
                    w[i] += cfg.learning_rate * d[i];
                }
            }
            for wi in &mut w {
                *wi *= decay;
            }
        }
        epoch_losses.push(objective(&w, &diffs, cfg.regularization));
    }
    Ok(LinearRankModel {
        weights: w,
        config: *cfg,
        epoch_losses,
    })
}

fn objective(w: &[f64; FEATURE_COUNT], diffs: &[[f64; FEATURE_COUNT]], lambda: f64) -> f64 {
    let hinge: f64 = diffs.iter().map(|d| (1.0 - dot(w, d)).max(0.0)).sum();
    let norm2: f64 = w.iter().map(|x| x * x).sum();
    hinge / diffs.len() as f64 + lambda * norm2
}

/// Fraction of (relevant, non-relevant) within-query pairs the model orders
/// correctly (strictly positive margin).
pub fn pairwise_accuracy(model: &LinearRankModel, tuples: &[RankTuple]) -> f64 {
    let mut total = 0usize;
    let mut correct = 0usize;
    let mut queries: Vec<&str> = tuples.iter().map(|t| t.query_id.as_str()).collect();
    queries.sort_unstable();
    queries.dedup();
    for q in queries {
        let group: Vec<&RankTuple> = tuples.iter().filter(|t| t.query_id == q).collect();
        for pos in group.iter().filter(|t| t.relevant) {
            for neg in group.iter().filter(|t| !t.relevant) {
                total += 1;
                if model.score(&pos.features) > model.score(&neg.features) {
                    correct += 1;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}
