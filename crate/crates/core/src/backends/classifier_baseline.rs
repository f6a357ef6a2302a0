//! In-repo gender-classifier baseline: whitespace token counts into an
//! L2-regularized logistic regression. Deterministic; the optional
//! transformer adapter lives outside the tested path.

use std::collections::BTreeMap;

use crate::backends::BackendError;
use crate::metrics::{accuracy, train_l2_logistic, ClassifierBackend, SparseRows};

const L2: f64 = 1.0;
const MAX_ITER: usize = 2000;
const TOL: f64 = 1e-7;

#[derive(Debug, Default)]
pub struct BaselineClassifier;

fn featurize(input: &str, vocab: &BTreeMap<String, usize>) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for token in input.split_whitespace() {
        if let Some(&idx) = vocab.get(&token.to_lowercase()) {
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    counts.into_iter().collect()
}

impl ClassifierBackend for BaselineClassifier {
    fn id(&self) -> &str {
        "baseline"
    }

    fn version(&self) -> &str {
        "1"
    }

    fn evaluate(
        &self,
        train: &[(String, bool)],
        test: &[(String, bool)],
    ) -> Result<f64, BackendError> {
        if train.is_empty() || test.is_empty() {
            return Err(BackendError::Config(
                "classifier needs non-empty train and test sets".to_string(),
            ));
        }
        let mut vocab: BTreeMap<String, usize> = BTreeMap::new();
        for (input, _) in train {
            for token in input.split_whitespace() {
                let next = vocab.len();
                vocab.entry(token.to_lowercase()).or_insert(next);
            }
        }
        let dim = vocab.len();
        let train_data = SparseRows {
            rows: train.iter().map(|(i, _)| featurize(i, &vocab)).collect(),
            dim,
        };
        let train_labels: Vec<bool> = train.iter().map(|(_, l)| *l).collect();
        let model = train_l2_logistic(&train_data, &train_labels, L2, MAX_ITER, TOL);
        let test_data = SparseRows {
            rows: test.iter().map(|(i, _)| featurize(i, &vocab)).collect(),
            dim,
        };
        let test_labels: Vec<bool> = test.iter().map(|(_, l)| *l).collect();
        Ok(accuracy(&model, &test_data, &test_labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_vocabularies_separate_cleanly() {
        let train: Vec<(String, bool)> = (0..20)
            .map(|i| {
                if i % 2 == 0 {
                    ("kind [SEP] gentle".to_string(), true)
                } else {
                    ("fierce [SEP] rough".to_string(), false)
                }
            })
            .collect();
        let test = vec![
            ("kind gentle".to_string(), true),
            ("fierce rough".to_string(), false),
        ];
        let acc = BaselineClassifier.evaluate(&train, &test).unwrap();
        assert_eq!(acc, 1.0);
    }
}
