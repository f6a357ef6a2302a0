//! L2-regularized logistic regression over sparse count features, trained
//! by full-batch gradient descent with a fixed step size. Everything is
//! deterministic: no random initialization, fixed iteration budget and
//! tolerance.

/// Rows of (feature index, value) pairs over a shared dimension.
#[derive(Debug, Clone)]
pub struct SparseRows {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &[(usize, f64)]) -> f64 {
        let mut f = self.intercept;
        for (idx, value) in row {
            if *idx < self.weights.len() {
                f += self.weights[*idx] * value;
            }
        }
        f
    }

    pub fn predict(&self, row: &[(usize, f64)]) -> bool {
        self.decision(row) > 0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Largest eigenvalue of the augmented Gram matrix `[X 1]^T [X 1]`,
/// estimated by power iteration from a fixed start vector.
fn top_eigenvalue(data: &SparseRows) -> f64 {
    let p = data.dim + 1;
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 0.0;
    for _ in 0..60 {
        // u = [X 1] v
        let mut u = Vec::with_capacity(data.rows.len());
        for row in &data.rows {
            let mut dot = v[data.dim];
            for (idx, value) in row {
                dot += v[*idx] * value;
            }
            u.push(dot);
        }
        // w = [X 1]^T u
        let mut w = vec![0.0; p];
        for (row, ui) in data.rows.iter().zip(&u) {
            w[data.dim] += ui;
            for (idx, value) in row {
                w[*idx] += ui * value;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    lambda
}

/// Trains on `data`/`labels` with penalty `(l2/2)·||w||²` (intercept
/// unregularized). Step size comes from the Lipschitz bound of the gradient.
pub fn train_l2_logistic(
    data: &SparseRows,
    labels: &[bool],
    l2: f64,
    max_iter: usize,
    tol: f64,
) -> LogisticModel {
    assert_eq!(data.rows.len(), labels.len());
    let p = data.dim;
    let mut weights = vec![0.0; p];
    let mut intercept = 0.0;
    let lipschitz = 0.25 * top_eigenvalue(data) + l2;
    if lipschitz == 0.0 {
        return LogisticModel { weights, intercept };
    }
    let step = 1.0 / lipschitz;
    for _ in 0..max_iter {
        let mut grad_w = vec![0.0; p];
        let mut grad_b = 0.0;
        for (row, &label) in data.rows.iter().zip(labels) {
            let mut f = intercept;
            for (idx, value) in row {
                f += weights[*idx] * value;
            }
            let residual = sigmoid(f) - if label { 1.0 } else { 0.0 };
            grad_b += residual;
            for (idx, value) in row {
                grad_w[*idx] += residual * value;
            }
        }
        for (g, w) in grad_w.iter_mut().zip(&weights) {
            *g += l2 * w;
        }
        let mut max_abs = grad_b.abs();
        for g in &grad_w {
            max_abs = max_abs.max(g.abs());
        }
        if max_abs < tol {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        intercept -= step * grad_b;
    }
    LogisticModel { weights, intercept }
}

/// Fraction of rows classified correctly.
pub fn accuracy(model: &LogisticModel, data: &SparseRows, labels: &[bool]) -> f64 {
    assert_eq!(data.rows.len(), labels.len());
    if labels.is_empty() {
        return 0.0;
    }
    let correct = data
        .rows
        .iter()
        .zip(labels)
        .filter(|(row, &label)| model.predict(row) == label)
        .count();
    correct as f64 / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_data_is_learned() {
        // Feature 0 fires for positives, feature 1 for negatives.
        let rows = vec![
            vec![(0, 2.0)],
            vec![(0, 1.0)],
            vec![(1, 1.0)],
            vec![(1, 2.0)],
        ];
        let data = SparseRows { rows, dim: 2 };
        let labels = vec![true, true, false, false];
        let model = train_l2_logistic(&data, &labels, 1.0, 2000, 1e-7);
        assert_eq!(accuracy(&model, &data, &labels), 1.0);
        assert!(model.weights[0] > 0.0);
        assert!(model.weights[1] < 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let rows: Vec<Vec<(usize, f64)>> = (0..40)
            .map(|i| vec![(i % 5, 1.0), ((i * 7) % 5, 2.0)])
            .collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 3 == 0).collect();
        let data = SparseRows { rows, dim: 5 };
        let a = train_l2_logistic(&data, &labels, 1.0, 500, 1e-7);
        let b = train_l2_logistic(&data, &labels, 1.0, 500, 1e-7);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.intercept, b.intercept);
    }

    #[test]
    fn unknown_test_features_are_ignored() {
        let model = LogisticModel {
            weights: vec![1.0],
            intercept: 0.0,
        };
        // Index 5 is outside the trained vocabulary.
        assert!(model.predict(&[(0, 1.0), (5, 100.0)]));
    }
}
