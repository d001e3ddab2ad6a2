//! Gaussian naive Bayes with a variance floor.

use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub(crate) struct NbModel {
    /// Classes seen in training, ascending.
    pub classes: Vec<usize>,
    pub log_priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub vars: Vec<Vec<f64>>,
}

pub(crate) fn train(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    var_floor: f64,
) -> NbModel {
    let dims = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut model = NbModel {
        classes: Vec::new(),
        log_priors: Vec::new(),
        means: Vec::new(),
        vars: Vec::new(),
    };
    for class in 0..n_classes {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(labels)
            .filter(|&(_, &l)| l == class)
            .map(|(r, _)| r)
            .collect();
        if members.is_empty() {
            continue;
        }
        let m = members.len() as f64;
        let mut mean = vec![0.0; dims];
        for row in &members {
            for (acc, v) in mean.iter_mut().zip(row.iter()) {
                *acc += v;
            }
        }
        for acc in &mut mean {
            *acc /= m;
        }
        let mut var = vec![0.0; dims];
        for row in &members {
            for ((acc, v), mu) in var.iter_mut().zip(row.iter()).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        for acc in &mut var {
            *acc = (*acc / m).max(var_floor);
        }
        model.classes.push(class);
        model.log_priors.push((m / n).ln());
        model.means.push(mean);
        model.vars.push(var);
    }
    model
}

/// Argmax of the joint log density over trained classes; exact ties go to
/// the lowest class index because `classes` is ascending.
pub(crate) fn predict(model: &NbModel, row: &[f64]) -> usize {
    let mut best_score = f64::NEG_INFINITY;
    let mut best_class = 0;
    for (slot, &class) in model.classes.iter().enumerate() {
        let mut score = model.log_priors[slot];
        for ((v, mean), var) in row.iter().zip(&model.means[slot]).zip(&model.vars[slot]) {
            let diff = v - mean;
            score += -0.5 * (TAU * var).ln() - diff * diff / (2.0 * var);
        }
        if score > best_score {
            best_score = score;
            best_class = class;
        }
    }
    best_class
}
