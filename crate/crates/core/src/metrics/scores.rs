//! Association scores against lexicons, semantic axes between contrasting
//! lexicons, and per-story aggregation of token-level scores.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{normalize_phrases, InferenceRecord, SocialAxis};
use crate::lexicons::{cosine, AffectLexicon, EmbeddingStore, Lexicon, LexiconError};
use crate::protagonist::Gender;
use crate::corpus::StoryId;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("lexicon {0:?} has no in-vocabulary words; cannot score against it")]
    LexiconUnusable(String),
    #[error("degenerate semantic axis: lexicons {a:?} and {b:?} have identical mean embeddings")]
    DegenerateAxis { a: String, b: String },
    #[error("embedding error: {0}")]
    Embedding(#[from] LexiconError),
}

/// Mean cosine similarity between `x` and the in-vocabulary words of the
/// lexicon. `Ok(None)` signals `x` is out of vocabulary; lexicon words out
/// of vocabulary are skipped, shrinking the effective lexicon size.
pub fn association_score(
    x: &str,
    lexicon: &Lexicon,
    embeddings: &EmbeddingStore,
) -> Result<Option<f64>, ScoreError> {
    let Some(xv) = embeddings.get(x) else {
        return Ok(None);
    };
    let mut sum = 0.0;
    let mut used = 0usize;
    for word in lexicon.words() {
        if let Some(av) = embeddings.get(word) {
            sum += cosine(xv, av)?;
            used += 1;
        }
    }
    if used == 0 {
        return Err(ScoreError::LexiconUnusable(lexicon.name().to_string()));
    }
    Ok(Some(sum / used as f64))
}

/// Difference of mean embeddings between two contrasting lexicons. Cosine
/// against the axis places a word between the two poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticAxis {
    pub name: String,
    pub vector: Vec<f64>,
    pub source_lexicons: (String, String),
}

pub fn build_semantic_axis(
    name: &str,
    a: &Lexicon,
    b: &Lexicon,
    embeddings: &EmbeddingStore,
) -> Result<SemanticAxis, ScoreError> {
    let mean_of = |lexicon: &Lexicon| -> Result<Vec<f64>, ScoreError> {
        let mut sum = vec![0.0; embeddings.dimension()];
        let mut used = 0usize;
        for word in lexicon.words() {
            if let Some(v) = embeddings.get(word) {
                for (acc, x) in sum.iter_mut().zip(v) {
                    *acc += x;
                }
                used += 1;
            }
        }
        if used == 0 {
            return Err(ScoreError::LexiconUnusable(lexicon.name().to_string()));
        }
        for acc in sum.iter_mut() {
            *acc /= used as f64;
        }
        Ok(sum)
    };
    let mean_a = mean_of(a)?;
    let mean_b = mean_of(b)?;
    let vector: Vec<f64> = mean_a.iter().zip(&mean_b).map(|(x, y)| x - y).collect();
    if vector.iter().all(|v| *v == 0.0) {
        return Err(ScoreError::DegenerateAxis {
            a: a.name().to_string(),
            b: b.name().to_string(),
        });
    }
    Ok(SemanticAxis {
        name: name.to_string(),
        vector,
        source_lexicons: (a.name().to_string(), b.name().to_string()),
    })
}

/// Cosine between `x` and the axis; positive means closer to the A pole.
/// `Ok(None)` when `x` is out of vocabulary.
pub fn axis_score(
    x: &str,
    axis: &SemanticAxis,
    embeddings: &EmbeddingStore,
) -> Result<Option<f64>, ScoreError> {
    let Some(xv) = embeddings.get(x) else {
        return Ok(None);
    };
    Ok(Some(cosine(xv, &axis.vector)?))
}

/// Normalized content tokens of a set of inference records, in record order.
pub fn axis_tokens(records: &[&InferenceRecord]) -> Vec<String> {
    let mut tokens = Vec::new();
    for record in records {
        tokens.extend(normalize_phrases(&record.phrases));
    }
    tokens
}

/// Mean token-level score over one story's records for one axis. `Ok(None)`
/// when no token is scoreable (all out of vocabulary or no tokens at all).
pub fn story_axis_aggregate<F>(
    records: &[&InferenceRecord],
    mut scorer: F,
) -> Result<Option<f64>, ScoreError>
where
    F: FnMut(&str) -> Result<Option<f64>, ScoreError>,
{
    let mut sum = 0.0;
    let mut used = 0usize;
    for token in axis_tokens(records) {
        if let Some(score) = scorer(&token)? {
            sum += score;
            used += 1;
        }
    }
    if used == 0 {
        Ok(None)
    } else {
        Ok(Some(sum / used as f64))
    }
}

/// Mean valence and arousal over the record tokens found in the affect
/// lexicon; `None` when nothing matched. Intended for the mental-state axes.
pub fn affect_aggregate(
    records: &[&InferenceRecord],
    affect: &AffectLexicon,
) -> Option<(f64, f64)> {
    let mut valence = 0.0;
    let mut arousal = 0.0;
    let mut used = 0usize;
    for token in axis_tokens(records) {
        if let Some((v, a)) = affect.get(&token) {
            valence += v;
            arousal += a;
            used += 1;
        }
    }
    if used == 0 {
        None
    } else {
        Some((valence / used as f64, arousal / used as f64))
    }
}

/// One per-story score for one axis and metric; `None` marks a missing
/// score (excluded, never imputed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub story_id: StoryId,
    pub gender: Gender,
    pub axis: SocialAxis,
    pub metric: String,
    pub value: Option<f64>,
}

/// Per-story, per-axis numeric scores with gender labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn push(&mut self, row: ScoreRow) {
        self.rows.push(row);
    }

    /// Checks the one-row-per-(story, axis, metric) and F/M-only invariants.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = std::collections::BTreeSet::new();
        for row in &self.rows {
            if row.gender == Gender::Unresolved {
                return Err(format!("row for {} has unresolved gender", row.story_id));
            }
            if !seen.insert((row.story_id.clone(), row.axis, row.metric.clone())) {
                return Err(format!(
                    "duplicate row for ({}, {}, {})",
                    row.story_id,
                    row.axis.code(),
                    row.metric
                ));
            }
        }
        Ok(())
    }

    /// Values with genders for one (axis, metric) pair, missing rows skipped.
    pub fn values_for(&self, axis: SocialAxis, metric: &str) -> Vec<(Gender, f64)> {
        self.rows
            .iter()
            .filter(|r| r.axis == axis && r.metric == metric)
            .filter_map(|r| r.value.map(|v| (r.gender, v)))
            .collect()
    }

    /// Count of missing (unscoreable) rows for one (axis, metric) pair.
    pub fn missing_count(&self, axis: SocialAxis, metric: &str) -> usize {
        self.rows
            .iter()
            .filter(|r| r.axis == axis && r.metric == metric && r.value.is_none())
            .count()
    }

    /// CSV export: `story_id,gender,axis,metric,value`, missing values empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["story_id", "gender", "axis", "metric", "value"])?;
        for row in &self.rows {
            let value = row.value.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                row.story_id.as_str(),
                row.gender.code(),
                row.axis.code(),
                &row.metric,
                &value,
            ])?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::Dimension;

    fn store(entries: &[(&str, &[f64])]) -> EmbeddingStore {
        let dim = entries[0].1.len();
        let mut store = EmbeddingStore::new(dim);
        for (word, vec) in entries {
            store.insert(word, vec.to_vec()).unwrap();
        }
        store
    }

    fn record(axis: SocialAxis, phrases: &[&str]) -> InferenceRecord {
        InferenceRecord {
            story_id: "s".into(),
            sentence_index: 0,
            axis,
            dimension: Dimension::XAttr,
            phrases: phrases.iter().map(|p| p.to_string()).collect(),
            backend_id: "stub".into(),
            backend_version: "1".into(),
        }
    }

    #[test]
    fn association_identity_and_mean() {
        let e = store(&[("x", &[1.0, 0.0]), ("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let la = Lexicon::new("la", ["a"]).unwrap();
        assert!((association_score("x", &la, &e).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let lab = Lexicon::new("lab", ["a", "b"]).unwrap();
        assert!((association_score("x", &lab, &e).unwrap().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn association_skips_oov_lexicon_words() {
        let e = store(&[("x", &[1.0, 0.0]), ("a", &[0.8, 0.6])]);
        let lex = Lexicon::new("l", ["a", "missing"]).unwrap();
        let score = association_score("x", &lex, &e).unwrap().unwrap();
        assert!((score - 0.8).abs() < 1e-12);
    }

    #[test]
    fn association_oov_word_is_missing_and_unusable_lexicon_errors() {
        let e = store(&[("x", &[1.0, 0.0]), ("a", &[1.0, 0.0])]);
        let lex = Lexicon::new("l", ["a"]).unwrap();
        assert_eq!(association_score("nope", &lex, &e).unwrap(), None);
        let all_oov = Lexicon::new("gone", ["zvq"]).unwrap();
        assert!(matches!(
            association_score("x", &all_oov, &e),
            Err(ScoreError::LexiconUnusable(_))
        ));
    }

    #[test]
    fn axis_is_difference_of_means() {
        let e = store(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let la = Lexicon::new("la", ["a"]).unwrap();
        let lb = Lexicon::new("lb", ["b"]).unwrap();
        let axis = build_semantic_axis("power", &la, &lb, &e).unwrap();
        assert_eq!(axis.vector, vec![1.0, -1.0]);

        let e2 = store(&[("a1", &[1.0, 0.0]), ("a2", &[0.0, 1.0]), ("b", &[0.0, 1.0])]);
        let la2 = Lexicon::new("la", ["a1", "a2"]).unwrap();
        let lb2 = Lexicon::new("lb", ["b"]).unwrap();
        let axis2 = build_semantic_axis("power", &la2, &lb2, &e2).unwrap();
        assert_eq!(axis2.vector, vec![0.5, -0.5]);
    }

    #[test]
    fn identical_lexicons_are_degenerate() {
        let e = store(&[("a", &[1.0, 0.0])]);
        let la = Lexicon::new("la", ["a"]).unwrap();
        assert!(matches!(
            build_semantic_axis("x", &la, &la, &e),
            Err(ScoreError::DegenerateAxis { .. })
        ));
    }

    #[test]
    fn axis_scores_follow_cosine() {
        let e = store(&[("x", &[1.0, 0.0]), ("y", &[1.0, 1.0]), ("z", &[-1.0, 1.0])]);
        let axis = SemanticAxis {
            name: "power".into(),
            vector: vec![1.0, -1.0],
            source_lexicons: ("a".into(), "b".into()),
        };
        let s = axis_score("x", &axis, &e).unwrap().unwrap();
        assert!((s - 1.0 / 2f64.sqrt()).abs() < 1e-9);
        assert!(axis_score("y", &axis, &e).unwrap().unwrap().abs() < 1e-12);
        assert!((axis_score("z", &axis, &e).unwrap().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(axis_score("oov", &axis, &e).unwrap(), None);
    }

    #[test]
    fn story_aggregate_means_and_missing() {
        let r = record(SocialAxis::Attributes, &["strong brave"]);
        let recs = vec![&r];
        let scores = [("strong", 0.2), ("brave", 0.4)];
        let got = story_axis_aggregate(&recs, |t| {
            Ok(scores.iter().find(|(w, _)| *w == t).map(|(_, s)| *s))
        })
        .unwrap()
        .unwrap();
        assert!((got - 0.3).abs() < 1e-12);

        let none = story_axis_aggregate(&recs, |_| Ok(None)).unwrap();
        assert_eq!(none, None);

        let single = record(SocialAxis::Attributes, &["brave"]);
        let got = story_axis_aggregate(&[&single], |_| Ok(Some(0.8)))
            .unwrap()
            .unwrap();
        assert!((got - 0.8).abs() < 1e-12);
    }

    #[test]
    fn affect_aggregation_means_found_tokens() {
        let affect = AffectLexicon::from_entries([
            ("happy".to_string(), 0.9, 0.6),
            ("calm".to_string(), 0.7, 0.2),
        ])
        .unwrap();
        let r = record(SocialAxis::MentalState, &["happy", "calm"]);
        let (v, a) = affect_aggregate(&[&r], &affect).unwrap();
        assert!((v - 0.8).abs() < 1e-12);
        assert!((a - 0.4).abs() < 1e-12);

        let unknown = record(SocialAxis::MentalState, &["xyzzy"]);
        assert_eq!(affect_aggregate(&[&unknown], &affect), None);

        let single = record(SocialAxis::MentalState, &["calm"]);
        let (v, a) = affect_aggregate(&[&single], &affect).unwrap();
        assert!((v - 0.7).abs() < 1e-12 && (a - 0.2).abs() < 1e-12);
    }

    #[test]
    fn score_table_csv_and_invariants() {
        let mut table = ScoreTable::default();
        table.push(ScoreRow {
            story_id: "s1".into(),
            gender: Gender::Female,
            axis: SocialAxis::Attributes,
            metric: "intellect".into(),
            value: Some(0.25),
        });
        table.push(ScoreRow {
            story_id: "s1".into(),
            gender: Gender::Female,
            axis: SocialAxis::Attributes,
            metric: "power".into(),
            value: None,
        });
        table.validate().unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("story_id,gender,axis,metric,value\n"));
        assert!(text.contains("s1,F,PR_ATT,intellect,0.25\n"));
        assert!(text.contains("s1,F,PR_ATT,power,\n"));

        table.push(ScoreRow {
            story_id: "s1".into(),
            gender: Gender::Female,
            axis: SocialAxis::Attributes,
            metric: "intellect".into(),
            value: Some(0.5),
        });
        assert!(table.validate().is_err());
    }
}
