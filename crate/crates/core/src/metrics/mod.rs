//! Scoring and statistics: lexicon association scores, semantic-axis
//! scores, pooled z-score group medians, affect aggregation, per-category
//! logistic GLM regression, and gender-leakage probes.

mod glm;
mod logistic;
mod probes;
mod scores;
mod stats;

pub use glm::{
    fit_logistic_glm, motivation_regression, CategoryObservation, CategoryRegression, GlmFit,
    RegressionError, RegressionTable, Significance, SkippedCategory,
};
pub use logistic::{accuracy, train_l2_logistic, LogisticModel, SparseRows};
pub use probes::{
    bow_leakage_probe, build_classifier_inputs, inference_gender_classifier, stratified_split,
    BowStory, ClassifierBackend, ClassifierStory, ProbeError, ProbeResult,
};
pub use scores::{
    affect_aggregate, association_score, axis_score, axis_tokens, build_semantic_axis,
    story_axis_aggregate, ScoreError, ScoreRow, ScoreTable, SemanticAxis,
};
pub use stats::{lower_median, zscore_group_medians, zscore_transform, GroupMedians, StatsError};
