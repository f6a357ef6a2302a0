//! Binomial-family GLM (logit link) fit by iteratively reweighted least
//! squares, plus the per-category motivation regression built on it.
//!
//! Covariates are standardized internally for numerical stability and
//! separation detection; reported coefficients and Wald standard errors are
//! back on the original scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::corpus::StoryId;
use crate::protagonist::Gender;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("need at least {min} stories per gender, got {female} female / {male} male")]
    TooFewStories {
        min: usize,
        female: usize,
        male: usize,
    },
    #[error("empty design: no observations")]
    EmptyDesign,
}

/// Standardized coefficient magnitude beyond which the fit is declared
/// separated (log-odds this large are numerically divergent).
const SEPARATION_THRESHOLD: f64 = 12.0;
const MAX_IRLS_ITER: usize = 50;
const IRLS_TOL: f64 = 1e-10;

/// Result of one GLM fit. Entry 0 is the intercept; entries 1.. follow the
/// input covariates. Covariates dropped as constant carry `None`.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub coefficients: Vec<Option<f64>>,
    pub std_errors: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    /// Sign of each coefficient at the last iteration, even when separated.
    pub signs: Vec<i8>,
    pub converged: bool,
    pub separated: bool,
    pub n: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Two-sided p-value for a standard-normal Wald z statistic.
fn wald_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Solves `a * x = b` for a small dense symmetric system via Gauss-Jordan
/// elimination with partial pivoting. Returns `None` for singular systems.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite matrix")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let div = a[col][col];
        for v in a[col].iter_mut() {
            *v /= div;
        }
        b[col] /= div;
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == 0.0 {
                continue;
            }
            for k in 0..n {
                let sub = factor * a[col][k];
                a[row][k] -= sub;
            }
            b[row] -= factor * b[col];
        }
    }
    Some(b)
}

/// Inverse of a small dense matrix, column by column.
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a.to_vec(), e)?);
    }
    // cols[j][i] is the (i, j) entry of the inverse.
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            inv[i][j] = *v;
        }
    }
    Some(inv)
}

/// Weighted information matrix `X^T W X` and score `X^T (y - mu)` for a
/// design with an implicit leading intercept column.
fn information(
    design: &[Vec<f64>],
    beta: &[f64],
    y: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = beta.len();
    let mut info = vec![vec![0.0; p]; p];
    let mut score = vec![0.0; p];
    for (row, &yi) in design.iter().zip(y) {
        let eta: f64 = beta.iter().zip(row).map(|(b, x)| b * x).sum();
        let mu = sigmoid(eta);
        let w = (mu * (1.0 - mu)).max(1e-10);
        for i in 0..p {
            score[i] += row[i] * (yi - mu);
            for j in i..p {
                info[i][j] += w * row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            info[i][j] = info[j][i];
        }
    }
    (info, score)
}

/// Fits `y ~ intercept + covariates` with a binomial family and logit link.
/// `covariates` holds one row per observation.
pub fn fit_logistic_glm(covariates: &[Vec<f64>], y: &[bool]) -> Result<GlmFit, RegressionError> {
    let n = covariates.len();
    if n == 0 || n != y.len() {
        return Err(RegressionError::EmptyDesign);
    }
    let p_in = covariates.first().map(|r| r.len()).unwrap_or(0);
    let y: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();

    // Standardize; constant covariates are dropped from the design.
    let mut means = vec![0.0; p_in];
    let mut scales = vec![0.0; p_in];
    for j in 0..p_in {
        let mean = covariates.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = covariates
            .iter()
            .map(|r| (r[j] - mean) * (r[j] - mean))
            .sum::<f64>()
            / n as f64;
        means[j] = mean;
        scales[j] = var.sqrt();
    }
    let kept: Vec<usize> = (0..p_in).filter(|&j| scales[j] > 0.0).collect();
    let p = kept.len() + 1;
    let design: Vec<Vec<f64>> = covariates
        .iter()
        .map(|r| {
            let mut row = Vec::with_capacity(p);
            row.push(1.0);
            for &j in &kept {
                row.push((r[j] - means[j]) / scales[j]);
            }
            row
        })
        .collect();

    let mut beta = vec![0.0; p];
    let mut converged = false;
    let mut separated = false;
    for _ in 0..MAX_IRLS_ITER {
        let (info, score) = information(&design, &beta, &y);
        let Some(delta) = solve(info, score) else {
            separated = true;
            break;
        };
        for (b, d) in beta.iter_mut().zip(&delta) {
            *b += d;
        }
        if beta.iter().skip(1).any(|b| b.abs() > SEPARATION_THRESHOLD) {
            separated = true;
            break;
        }
        if delta.iter().all(|d| d.abs() < IRLS_TOL) {
            converged = true;
            break;
        }
    }

    // Back-transform to the original scale.
    let mut coef_orig = vec![None; p_in + 1];
    let mut signs = vec![0i8; p_in + 1];
    let mut intercept = beta[0];
    for (k, &j) in kept.iter().enumerate() {
        let b = beta[k + 1] / scales[j];
        intercept -= beta[k + 1] * means[j] / scales[j];
        coef_orig[j + 1] = Some(b);
        signs[j + 1] = if b > 0.0 {
            1
        } else if b < 0.0 {
            -1
        } else {
            0
        };
    }
    coef_orig[0] = Some(intercept);
    signs[0] = if intercept > 0.0 { 1 } else if intercept < 0.0 { -1 } else { 0 };

    let mut std_errors = vec![None; p_in + 1];
    let mut p_values = vec![None; p_in + 1];
    if separated || !converged {
        return Ok(GlmFit {
            coefficients: vec![None; p_in + 1],
            std_errors,
            p_values,
            signs,
            converged,
            separated: true,
            n,
        });
    }

    // Wald errors from the information matrix on the original scale.
    let beta_orig: Vec<f64> = {
        let mut v = vec![intercept];
        for &j in &kept {
            v.push(coef_orig[j + 1].expect("kept covariate has coefficient"));
        }
        v
    };
    let design_orig: Vec<Vec<f64>> = covariates
        .iter()
        .map(|r| {
            let mut row = Vec::with_capacity(p);
            row.push(1.0);
            for &j in &kept {
                row.push(r[j]);
            }
            row
        })
        .collect();
    let (info, _) = information(&design_orig, &beta_orig, &y);
    let Some(cov) = invert(&info) else {
        return Ok(GlmFit {
            coefficients: vec![None; p_in + 1],
            std_errors,
            p_values,
            signs,
            converged,
            separated: true,
            n,
        });
    };
    let se0 = cov[0][0].max(0.0).sqrt();
    std_errors[0] = Some(se0);
    p_values[0] = Some(wald_p(intercept / se0));
    for (k, &j) in kept.iter().enumerate() {
        let se = cov[k + 1][k + 1].max(0.0).sqrt();
        let b = coef_orig[j + 1].expect("kept covariate");
        std_errors[j + 1] = Some(se);
        p_values[j + 1] = Some(if se > 0.0 { wald_p(b / se) } else { 0.0 });
    }

    Ok(GlmFit {
        coefficients: coef_orig,
        std_errors,
        p_values,
        signs,
        converged,
        separated,
        n,
    })
}

/// Figure-style significance marks: results at p < 0.001 go unmarked,
/// weaker levels get daggers, the rest are not significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "p<0.001")]
    VeryStrong,
    #[serde(rename = "p<0.01")]
    Strong,
    #[serde(rename = "p<0.05")]
    Moderate,
    #[serde(rename = "ns")]
    NotSignificant,
    #[serde(rename = "separated")]
    Separated,
}

impl Significance {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            Significance::VeryStrong
        } else if p < 0.01 {
            Significance::Strong
        } else if p < 0.05 {
            Significance::Moderate
        } else {
            Significance::NotSignificant
        }
    }

    /// Mark rendered next to a coefficient in tables and figures.
    pub fn mark(&self) -> &'static str {
        match self {
            Significance::VeryStrong => "",
            Significance::Strong => "\u{2020}",
            Significance::Moderate => "\u{2021}",
            Significance::NotSignificant => "ns",
            Significance::Separated => "sep",
        }
    }

    pub fn is_significant(&self) -> bool {
        matches!(
            self,
            Significance::VeryStrong | Significance::Strong | Significance::Moderate
        )
    }
}

/// Per-story inputs to the motivation regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryObservation {
    pub story_id: StoryId,
    pub gender: Gender,
    pub category_counts: BTreeMap<String, usize>,
    pub total_tokens: usize,
}

/// One category's regression outcome. `coefficient` is the log-odds change
/// for the female label per additional category token, controlling for the
/// total token count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryRegression {
    pub category: String,
    pub coefficient: Option<f64>,
    pub std_error: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
    pub significance: Significance,
    pub separated: bool,
    pub direction: i8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedCategory {
    pub category: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionTable {
    pub categories: Vec<CategoryRegression>,
    pub skipped: Vec<SkippedCategory>,
    pub n_female: usize,
    pub n_male: usize,
}

/// Fits `gender (F=1) ~ category_count + total_tokens` per category with a
/// binomial GLM. Zero-variance categories are skipped with a note; perfect
/// separation is flagged rather than reported as a finite coefficient.
pub fn motivation_regression(
    observations: &[CategoryObservation],
    categories: &[String],
) -> Result<RegressionTable, RegressionError> {
    let n_female = observations
        .iter()
        .filter(|o| o.gender == Gender::Female)
        .count();
    let n_male = observations
        .iter()
        .filter(|o| o.gender == Gender::Male)
        .count();
    if n_female < 2 || n_male < 2 {
        return Err(RegressionError::TooFewStories {
            min: 2,
            female: n_female,
            male: n_male,
        });
    }
    let y: Vec<bool> = observations
        .iter()
        .map(|o| o.gender == Gender::Female)
        .collect();
    let mut table = RegressionTable {
        categories: Vec::new(),
        skipped: Vec::new(),
        n_female,
        n_male,
    };
    for category in categories {
        let counts: Vec<f64> = observations
            .iter()
            .map(|o| *o.category_counts.get(category).unwrap_or(&0) as f64)
            .collect();
        if counts.iter().all(|c| *c == 0.0) {
            table.skipped.push(SkippedCategory {
                category: category.clone(),
                reason: "appears in no story".to_string(),
            });
            continue;
        }
        let first = counts[0];
        if counts.iter().all(|c| *c == first) {
            table.skipped.push(SkippedCategory {
                category: category.clone(),
                reason: "zero variance".to_string(),
            });
            continue;
        }
        let rows: Vec<Vec<f64>> = observations
            .iter()
            .zip(&counts)
            .map(|(o, c)| vec![*c, o.total_tokens as f64])
            .collect();
        let fit = fit_logistic_glm(&rows, &y)?;
        let significance = match (fit.separated, fit.p_values[1]) {
            (true, _) => Significance::Separated,
            (false, Some(p)) => Significance::from_p(p),
            (false, None) => Significance::Separated,
        };
        table.categories.push(CategoryRegression {
            category: category.clone(),
            coefficient: fit.coefficients[1],
            std_error: fit.std_errors[1],
            p_value: fit.p_values[1],
            n: fit.n,
            significance,
            separated: fit.separated,
            direction: fit.signs[1],
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn observation(
        id: usize,
        gender: Gender,
        count: usize,
        tokens: usize,
    ) -> CategoryObservation {
        let mut category_counts = BTreeMap::new();
        if count > 0 {
            category_counts.insert("planted".to_string(), count);
        }
        CategoryObservation {
            story_id: format!("s{id}").as_str().into(),
            gender,
            category_counts,
            total_tokens: tokens,
        }
    }

    /// Planted corpus: the category shows up in 90% of female and 10% of
    /// male stories, equal word counts.
    fn planted(seed: u64, n_per_gender: usize) -> Vec<CategoryObservation> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut obs = Vec::new();
        for i in 0..n_per_gender {
            let hit = rng.gen::<f64>() < 0.9;
            obs.push(observation(i, Gender::Female, hit as usize, 30));
        }
        for i in 0..n_per_gender {
            let hit = rng.gen::<f64>() < 0.1;
            obs.push(observation(n_per_gender + i, Gender::Male, hit as usize, 30));
        }
        obs
    }

    #[test]
    fn planted_category_recovers_positive_significant_coefficient() {
        let obs = planted(7, 100);
        let table = motivation_regression(&obs, &["planted".to_string()]).unwrap();
        let cat = &table.categories[0];
        assert!(!cat.separated);
        assert!(cat.coefficient.unwrap() > 0.0);
        assert!(cat.p_value.unwrap() < 0.01);
        assert!(cat.significance.is_significant());
    }

    #[test]
    fn sign_recovery_is_stable_over_replicates() {
        for seed in 0..20 {
            let obs = planted(seed, 100);
            let table = motivation_regression(&obs, &["planted".to_string()]).unwrap();
            assert_eq!(table.categories[0].direction, 1, "seed {seed}");
        }
    }

    #[test]
    fn balanced_random_category_is_mostly_not_significant() {
        let mut insignificant = 0usize;
        for seed in 0..100u64 {
            let mut rng = StdRng::seed_from_u64(1000 + seed);
            let mut obs = Vec::new();
            for i in 0..100 {
                obs.push(observation(i, Gender::Female, rng.gen_range(0..2), 30));
            }
            for i in 0..100 {
                obs.push(observation(100 + i, Gender::Male, rng.gen_range(0..2), 30));
            }
            let table = motivation_regression(&obs, &["planted".to_string()]).unwrap();
            if table.categories[0].p_value.unwrap() > 0.05 {
                insignificant += 1;
            }
        }
        assert!(insignificant >= 90, "only {insignificant}/100 were p>0.05");
    }

    #[test]
    fn absent_and_constant_categories_are_skipped() {
        let obs = planted(3, 50);
        let table = motivation_regression(
            &obs,
            &["ghost".to_string(), "planted".to_string()],
        )
        .unwrap();
        assert_eq!(table.skipped.len(), 1);
        assert_eq!(table.skipped[0].category, "ghost");
        assert_eq!(table.categories.len(), 1);
    }

    #[test]
    fn perfect_separation_is_flagged() {
        let mut obs = Vec::new();
        for i in 0..20 {
            obs.push(observation(i, Gender::Female, 1, 30));
        }
        for i in 0..20 {
            obs.push(observation(20 + i, Gender::Male, 0, 30));
        }
        let table = motivation_regression(&obs, &["planted".to_string()]).unwrap();
        let cat = &table.categories[0];
        assert!(cat.separated);
        assert_eq!(cat.coefficient, None);
        assert_eq!(cat.significance, Significance::Separated);
        assert_eq!(cat.direction, 1);
    }

    #[test]
    fn too_few_stories_is_an_error() {
        let obs = vec![
            observation(0, Gender::Female, 1, 10),
            observation(1, Gender::Male, 0, 10),
        ];
        assert!(matches!(
            motivation_regression(&obs, &["planted".to_string()]),
            Err(RegressionError::TooFewStories { .. })
        ));
    }

    #[test]
    fn glm_matches_closed_form_on_grouped_data() {
        // One binary covariate: logit(P(y=1|x)) has closed-form cell logits.
        // Cells: x=1 -> 30 of 40 positive; x=0 -> 10 of 40 positive.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..30 {
            rows.push(vec![1.0]);
            y.push(true);
        }
        for _ in 0..10 {
            rows.push(vec![1.0]);
            y.push(false);
        }
        for _ in 0..10 {
            rows.push(vec![0.0]);
            y.push(true);
        }
        for _ in 0..30 {
            rows.push(vec![0.0]);
            y.push(false);
        }
        let fit = fit_logistic_glm(&rows, &y).unwrap();
        let b0 = fit.coefficients[0].unwrap();
        let b1 = fit.coefficients[1].unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        assert!((b0 - logit(0.25)).abs() < 1e-6);
        assert!((b1 - (logit(0.75) - logit(0.25))).abs() < 1e-6);
        // Wald SE for the slope of a 2x2 table: sqrt(sum of 1/cell counts).
        let se_expected = (1.0f64 / 30.0 + 1.0 / 10.0 + 1.0 / 10.0 + 1.0 / 30.0).sqrt();
        assert!((fit.std_errors[1].unwrap() - se_expected).abs() < 1e-6);
    }

    #[test]
    fn significance_thresholds() {
        assert_eq!(Significance::from_p(0.0005), Significance::VeryStrong);
        assert_eq!(Significance::from_p(0.005), Significance::Strong);
        assert_eq!(Significance::from_p(0.03), Significance::Moderate);
        assert_eq!(Significance::from_p(0.2), Significance::NotSignificant);
        assert_eq!(Significance::Strong.mark(), "\u{2020}");
        assert_eq!(Significance::Moderate.mark(), "\u{2021}");
    }
}
