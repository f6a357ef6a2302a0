//! Gender-leakage probes: a bag-of-words classifier over anonymized
//! sentences and a story-level classifier over concatenated inferences.
//! Above-chance held-out accuracy signals residual gender information.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendError;
use crate::corpus::StoryId;
use crate::inference::{InferenceRecord, SocialAxis};
use crate::metrics::logistic::{accuracy, train_l2_logistic, SparseRows};
use crate::protagonist::Gender;

/// Regularization strength and optimizer budget shared by both in-repo
/// probes, pinned for seed-determinism.
const PROBE_L2: f64 = 1.0;
const PROBE_MAX_ITER: usize = 2000;
const PROBE_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("need at least {min} stories per gender, got {female} female / {male} male")]
    TooFewStories {
        min: usize,
        female: usize,
        male: usize,
    },
    #[error("split left a gender class empty on the {side} side")]
    EmptySplit { side: &'static str },
    #[error("classifier backend failed: {0}")]
    Backend(#[from] BackendError),
}

/// Outcome of one probe run. Instances are sentences for the bag-of-words
/// probe and stories for the inference classifier; the split is always by
/// story id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub probe: String,
    pub accuracy: f64,
    pub seed: u64,
    pub train_stories: usize,
    pub test_stories: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    pub excluded_stories: usize,
}

/// Stratified 80/20 split by story id, seeded. Both classes keep at least
/// one story on each side.
pub fn stratified_split(
    female_ids: &[StoryId],
    male_ids: &[StoryId],
    seed: u64,
) -> Result<(BTreeSet<StoryId>, BTreeSet<StoryId>), ProbeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    for ids in [female_ids, male_ids] {
        if ids.len() < 2 {
            return Err(ProbeError::EmptySplit {
                side: if ids.len() < 1 { "train" } else { "test" },
            });
        }
        let mut shuffled: Vec<StoryId> = ids.to_vec();
        shuffled.sort();
        shuffled.shuffle(&mut rng);
        let cut = ((shuffled.len() * 8) / 10).clamp(1, shuffled.len() - 1);
        for (i, id) in shuffled.into_iter().enumerate() {
            if i < cut {
                train.insert(id);
            } else {
                test.insert(id);
            }
        }
    }
    Ok((train, test))
}

/// One anonymized story for the bag-of-words probe: sentence token surfaces
/// plus the resolved gender.
#[derive(Debug, Clone)]
pub struct BowStory {
    pub story_id: StoryId,
    pub gender: Gender,
    pub sentences: Vec<Vec<String>>,
}

fn ids_by_gender(items: &[(StoryId, Gender)]) -> (Vec<StoryId>, Vec<StoryId>, usize) {
    let mut female = Vec::new();
    let mut male = Vec::new();
    let mut excluded = 0usize;
    for (id, gender) in items {
        match gender {
            Gender::Female => female.push(id.clone()),
            Gender::Male => male.push(id.clone()),
            Gender::Unresolved => excluded += 1,
        }
    }
    female.sort();
    male.sort();
    (female, male, excluded)
}

/// Trains a regularized linear classifier on token-count features of
/// anonymized sentences (labeled with the story's gender) and reports
/// held-out per-sentence accuracy. Requires at least 20 stories per gender.
pub fn bow_leakage_probe(stories: &[BowStory], seed: u64) -> Result<ProbeResult, ProbeError> {
    let labeled: Vec<(StoryId, Gender)> = stories
        .iter()
        .map(|s| (s.story_id.clone(), s.gender))
        .collect();
    let (female, male, excluded) = ids_by_gender(&labeled);
    if female.len() < 20 || male.len() < 20 {
        return Err(ProbeError::TooFewStories {
            min: 20,
            female: female.len(),
            male: male.len(),
        });
    }
    let (train_ids, test_ids) = stratified_split(&female, &male, seed)?;

    let mut sorted: Vec<&BowStory> = stories
        .iter()
        .filter(|s| s.gender != Gender::Unresolved)
        .collect();
    sorted.sort_by(|a, b| a.story_id.cmp(&b.story_id));

    let mut vocab: BTreeMap<String, usize> = BTreeMap::new();
    for story in sorted.iter().filter(|s| train_ids.contains(&s.story_id)) {
        for sentence in &story.sentences {
            for token in sentence {
                let lower = token.to_lowercase();
                let next = vocab.len();
                vocab.entry(lower).or_insert(next);
            }
        }
    }

    let featurize = |sentence: &[String]| -> Vec<(usize, f64)> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for token in sentence {
            if let Some(&idx) = vocab.get(&token.to_lowercase()) {
                *counts.entry(idx).or_insert(0.0) += 1.0;
            }
        }
        counts.into_iter().collect()
    };

    let mut train_rows = Vec::new();
    let mut train_labels = Vec::new();
    let mut test_rows = Vec::new();
    let mut test_labels = Vec::new();
    for story in &sorted {
        let label = story.gender == Gender::Female;
        let (rows, labels) = if train_ids.contains(&story.story_id) {
            (&mut train_rows, &mut train_labels)
        } else if test_ids.contains(&story.story_id) {
            (&mut test_rows, &mut test_labels)
        } else {
            continue;
        };
        for sentence in &story.sentences {
            rows.push(featurize(sentence));
            labels.push(label);
        }
    }
    if !train_labels.iter().any(|l| *l) || train_labels.iter().all(|l| *l) {
        return Err(ProbeError::EmptySplit { side: "train" });
    }

    let dim = vocab.len();
    let train_data = SparseRows {
        rows: train_rows,
        dim,
    };
    let model = train_l2_logistic(&train_data, &train_labels, PROBE_L2, PROBE_MAX_ITER, PROBE_TOL);
    let test_data = SparseRows {
        rows: test_rows,
        dim,
    };
    Ok(ProbeResult {
        probe: "bow_leakage".to_string(),
        accuracy: accuracy(&model, &test_data, &test_labels),
        seed,
        train_stories: train_ids.len(),
        test_stories: test_ids.len(),
        train_instances: train_data.rows.len(),
        test_instances: test_data.rows.len(),
        excluded_stories: excluded,
    })
}

/// Strategy contract for the story-level gender classifier: given labeled
/// train/test inputs (inference strings), return held-out accuracy.
pub trait ClassifierBackend: Send + Sync {
    fn id(&self) -> &str;
    fn version(&self) -> &str;
    fn evaluate(
        &self,
        train: &[(String, bool)],
        test: &[(String, bool)],
    ) -> Result<f64, BackendError>;
}

/// One story's classifier input: all inference phrases joined by the
/// literal `[SEP]` token in deterministic record order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierStory {
    pub story_id: StoryId,
    pub gender: Gender,
    pub input: String,
}

/// Axes whose inferences feed the gender classifier.
pub const CLASSIFIER_AXES: [SocialAxis; 4] = [
    SocialAxis::Attributes,
    SocialAxis::MentalState,
    SocialAxis::ReactionToOthers,
    SocialAxis::Motivations,
];

/// Builds per-story classifier inputs. Stories missing records for any
/// required axis are excluded; the count is reported.
pub fn build_classifier_inputs(
    records: &[InferenceRecord],
    genders: &BTreeMap<StoryId, Gender>,
) -> (Vec<ClassifierStory>, usize) {
    let mut per_story: BTreeMap<&StoryId, Vec<&InferenceRecord>> = BTreeMap::new();
    for record in records {
        if CLASSIFIER_AXES.contains(&record.axis) {
            per_story.entry(&record.story_id).or_default().push(record);
        }
    }
    let mut stories = Vec::new();
    let mut excluded = 0usize;
    for (story_id, gender) in genders {
        if *gender == Gender::Unresolved {
            continue;
        }
        let Some(story_records) = per_story.get(story_id) else {
            excluded += 1;
            continue;
        };
        let has_all = CLASSIFIER_AXES
            .iter()
            .all(|axis| story_records.iter().any(|r| r.axis == *axis));
        if !has_all {
            excluded += 1;
            continue;
        }
        let mut records = story_records.clone();
        records.sort_by_key(|r| (r.sentence_index, r.axis, r.dimension));
        let phrases: Vec<&str> = records
            .iter()
            .flat_map(|r| r.phrases.iter().map(|p| p.as_str()))
            .collect();
        stories.push(ClassifierStory {
            story_id: story_id.clone(),
            gender: *gender,
            input: phrases.join(" [SEP] "),
        });
    }
    (stories, excluded)
}

/// Splits stories by id and delegates training to the classifier backend.
pub fn inference_gender_classifier(
    stories: &[ClassifierStory],
    backend: &dyn ClassifierBackend,
    seed: u64,
    excluded_stories: usize,
) -> Result<ProbeResult, ProbeError> {
    let labeled: Vec<(StoryId, Gender)> = stories
        .iter()
        .map(|s| (s.story_id.clone(), s.gender))
        .collect();
    let (female, male, _) = ids_by_gender(&labeled);
    if female.len() < 2 || male.len() < 2 {
        return Err(ProbeError::TooFewStories {
            min: 2,
            female: female.len(),
            male: male.len(),
        });
    }
    let (train_ids, test_ids) = stratified_split(&female, &male, seed)?;
    let mut sorted: Vec<&ClassifierStory> = stories.iter().collect();
    sorted.sort_by(|a, b| a.story_id.cmp(&b.story_id));
    let mut train = Vec::new();
    let mut test = Vec::new();
    for story in sorted {
        let example = (story.input.clone(), story.gender == Gender::Female);
        if train_ids.contains(&story.story_id) {
            train.push(example);
        } else if test_ids.contains(&story.story_id) {
            test.push(example);
        }
    }
    let accuracy = backend.evaluate(&train, &test)?;
    Ok(ProbeResult {
        probe: format!("inference_gender_classifier/{}", backend.id()),
        accuracy,
        seed,
        train_stories: train.len(),
        test_stories: test.len(),
        train_instances: train.len(),
        test_instances: test.len(),
        excluded_stories,
    })
}
