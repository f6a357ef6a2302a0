//! Pooled z-score transformation and per-gender medians.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protagonist::Gender;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least 2 values to standardize, got {0}")]
    TooFew(usize),
    #[error("constant scores: pooled standard deviation is zero")]
    ConstantScores,
}

/// Standardizes values by the pooled mean and population standard deviation.
pub fn zscore_transform(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFew(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(StatsError::ConstantScores);
    }
    let std = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

/// Lower median: for even counts, the smaller of the two middle values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN scores"));
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Per-gender medians of pooled z-scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMedians {
    pub female: Option<f64>,
    pub male: Option<f64>,
    pub n_female: usize,
    pub n_male: usize,
}

/// Standardizes all values jointly over both genders (pooled mean,
/// population standard deviation), then takes the median z-score per gender.
/// Unresolved-gender values must be excluded upstream.
pub fn zscore_group_medians(values: &[(Gender, f64)]) -> Result<GroupMedians, StatsError> {
    debug_assert!(
        values.iter().all(|(g, _)| *g != Gender::Unresolved),
        "unresolved stories must not reach gendered aggregation"
    );
    let raw: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
    let z = zscore_transform(&raw)?;
    let mut female = Vec::new();
    let mut male = Vec::new();
    for ((gender, _), zv) in values.iter().zip(&z) {
        match gender {
            Gender::Female => female.push(*zv),
            Gender::Male => male.push(*zv),
            Gender::Unresolved => {}
        }
    }
    Ok(GroupMedians {
        female: lower_median(&female),
        male: lower_median(&male),
        n_female: female.len(),
        n_male: male.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_per_gender_standardizes_symmetrically() {
        let medians = zscore_group_medians(&[(Gender::Female, 1.0), (Gender::Male, 3.0)]).unwrap();
        assert!((medians.female.unwrap() + 1.0).abs() < 1e-12);
        assert!((medians.male.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_scores_error() {
        let err = zscore_group_medians(&[(Gender::Female, 2.0), (Gender::Male, 2.0)]).unwrap_err();
        assert!(matches!(err, StatsError::ConstantScores));
    }

    #[test]
    fn pooling_spans_both_genders() {
        // F: [1,2,3], M: [2]; pooled mean 2, population std sqrt(0.5).
        let values = vec![
            (Gender::Female, 1.0),
            (Gender::Female, 2.0),
            (Gender::Female, 3.0),
            (Gender::Male, 2.0),
        ];
        let medians = zscore_group_medians(&values).unwrap();
        let std = (0.5f64).sqrt();
        // F z-scores: [-1/std*? ...] => [(1-2)/std, 0, (3-2)/std]; median 0.
        assert!(medians.female.unwrap().abs() < 1e-12);
        assert!(medians.male.unwrap().abs() < 1e-12);
        assert_eq!(medians.n_female, 3);
        assert_eq!(medians.n_male, 1);
        // Spot-check the standardization itself.
        let z = zscore_transform(&[1.0, 2.0, 3.0, 2.0]).unwrap();
        assert!((z[0] + 1.0 / std).abs() < 1e-12);
    }

    #[test]
    fn transformed_scores_have_zero_mean_unit_std() {
        let values = vec![0.3, -1.2, 4.5, 2.2, 0.0, 7.7];
        let z = zscore_transform(&values).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((var.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_median_for_even_counts() {
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&[1.0, 2.0, 3.0]), Some(2.0));
        assert_eq!(lower_median(&[]), None);
    }

    #[test]
    fn missing_gender_side_is_none() {
        let medians = zscore_group_medians(&[
            (Gender::Female, 1.0),
            (Gender::Female, 2.0),
        ])
        .unwrap();
        assert!(medians.female.is_some());
        assert_eq!(medians.male, None);
        assert_eq!(medians.n_male, 0);
    }
}
