//! Multinomial logistic regression trained by full-batch gradient descent.

#[derive(Debug, Clone)]
pub(crate) struct LrModel {
    /// One row per class; the last column is the intercept.
    pub weights: Vec<Vec<f64>>,
    /// Objective after each update: mean cross-entropy plus the L2 penalty.
    pub epoch_losses: Vec<f64>,
}

impl LrModel {
    fn logits(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| {
                let dims = w.len() - 1;
                w[..dims].iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + w[dims]
            })
            .collect()
    }
}

/// Weights start at zero, so a zero-epoch model scores every class equally
/// and the ascending-argmax tie rule makes it a constant class-0 predictor.
pub(crate) fn train(
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    rate: f64,
    l2: f64,
    epochs: usize,
) -> LrModel {
    let dims = rows.first().map_or(0, Vec::len);
    let mut model = LrModel {
        weights: vec![vec![0.0; dims + 1]; n_classes],
        epoch_losses: Vec::with_capacity(epochs),
    };
    let n = rows.len() as f64;
    let (_, mut grad) = objective(&model, rows, labels, l2);
    for _ in 0..epochs {
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            for d in 0..dims {
                w[d] -= rate * (g[d] / n + 2.0 * l2 * w[d]);
            }
            w[dims] -= rate * g[dims] / n;
        }
        let (loss, next_grad) = objective(&model, rows, labels, l2);
        model.epoch_losses.push(loss);
        grad = next_grad;
    }
    model
}

pub(crate) fn predict(model: &LrModel, row: &[f64]) -> usize {
    let logits = model.logits(row);
    let mut best = 0;
    for (class, &score) in logits.iter().enumerate() {
        if score > logits[best] {
            best = class;
        }
    }
    best
}

fn objective(
    model: &LrModel,
    rows: &[Vec<f64>],
    labels: &[usize],
    l2: f64,
) -> (f64, Vec<Vec<f64>>) {
    let n_classes = model.weights.len();
    let dims = rows.first().map_or(0, Vec::len);
    let mut grad = vec![vec![0.0; dims + 1]; n_classes];
    let mut loss = 0.0;
    for (row, &label) in rows.iter().zip(labels) {
        let probs = softmax(&model.logits(row));
        loss -= probs[label].max(f64::MIN_POSITIVE).ln();
        for (class, g) in grad.iter_mut().enumerate() {
            let err = probs[class] - f64::from(u8::from(class == label));
            for (gd, x) in g[..dims].iter_mut().zip(row) {
                *gd += err * x;
            }
            g[dims] += err;
        }
    }
    loss /= rows.len() as f64;
    for w in &model.weights {
        let dims = w.len() - 1;
        loss += l2 * w[..dims].iter().map(|v| v * v).sum::<f64>();
    }
    (loss, grad)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let peak = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - peak).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_rows() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (center, label) in [(-1.2, 0), (0.0, 1), (1.2, 2)] {
            for offset in [-0.08, -0.04, 0.0, 0.04, 0.08] {
                rows.push(vec![center + offset]);
                labels.push(label);
            }
        }
        (rows, labels)
    }

    #[test]
    fn zero_epochs_is_a_constant_class_zero_predictor() {
        let (rows, labels) = blob_rows();
        let model = train(&rows, &labels, 3, 0.1, 0.0, 0);
        for probe in [-5.0, -1.2, 0.0, 1.2, 5.0] {
            assert_eq!(predict(&model, &[probe]), 0);
        }
        assert!(model.epoch_losses.is_empty());
    }

    #[test]
    fn separable_clusters_are_learned() {
        let (rows, labels) = blob_rows();
        let model = train(&rows, &labels, 3, 0.5, 0.0, 400);
        for (row, &label) in rows.iter().zip(&labels) {
            assert_eq!(predict(&model, row), label);
        }
    }

    #[test]
    fn loss_never_increases_under_a_small_rate() {
        let (rows, labels) = blob_rows();
        let model = train(&rows, &labels, 3, 0.05, 1e-3, 300);
        assert_eq!(model.epoch_losses.len(), 300);
        for pair in model.epoch_losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "loss rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn l2_shrinks_weights() {
        let (rows, labels) = blob_rows();
        let free = train(&rows, &labels, 3, 0.5, 0.0, 200);
        let ridged = train(&rows, &labels, 3, 0.5, 0.1, 200);
        let norm = |m: &LrModel| -> f64 {
            m.weights
                .iter()
                .flat_map(|w| &w[..w.len() - 1])
                .map(|v| v * v)
                .sum()
        };
        assert!(norm(&ridged) < norm(&free));
    }
}
