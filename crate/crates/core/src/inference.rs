//! Social axes, commonsense dimensions, backend-driven inference, phrase
//! normalization, and the persistent inference cache.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::BackendError;
use crate::corpus::{Corpus, StoryId};
use crate::protagonist::{Gender, ProtagonistAnnotation, SentenceRole};
use crate::util::sha256_hex;

/// The five social axes measured about a protagonist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SocialAxis {
    /// Portrayal and attributes of the protagonist.
    #[serde(rename = "PR_ATT")]
    Attributes,
    /// The protagonist's own mental states.
    #[serde(rename = "PR_ME")]
    MentalState,
    /// Repercussions of the protagonist's behavior on others' mental states.
    #[serde(rename = "OT_ME_PR")]
    ImpactOnOthers,
    /// Repercussions of others' behavior on the protagonist's mental state.
    #[serde(rename = "PR_ME_OT")]
    ReactionToOthers,
    /// The protagonist's motivations.
    #[serde(rename = "PR_MOT")]
    Motivations,
}

impl SocialAxis {
    pub const ALL: [SocialAxis; 5] = [
        SocialAxis::Attributes,
        SocialAxis::MentalState,
        SocialAxis::ImpactOnOthers,
        SocialAxis::ReactionToOthers,
        SocialAxis::Motivations,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            SocialAxis::Attributes => "PR_ATT",
            SocialAxis::MentalState => "PR_ME",
            SocialAxis::ImpactOnOthers => "OT_ME_PR",
            SocialAxis::ReactionToOthers => "PR_ME_OT",
            SocialAxis::Motivations => "PR_MOT",
        }
    }

    /// Axes whose inferences describe mental states and feed the affect
    /// lexicon analysis.
    pub fn is_mental_state(&self) -> bool {
        matches!(
            self,
            SocialAxis::MentalState | SocialAxis::ImpactOnOthers | SocialAxis::ReactionToOthers
        )
    }
}

/// Commonsense relation types generated about an event's agent (x) or the
/// other participants (o).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "xAttr")]
    XAttr,
    #[serde(rename = "xReact")]
    XReact,
    #[serde(rename = "oReact")]
    OReact,
    #[serde(rename = "xIntent")]
    XIntent,
    #[serde(rename = "xWant")]
    XWant,
    #[serde(rename = "xNeed")]
    XNeed,
}

impl Dimension {
    pub fn code(&self) -> &'static str {
        match self {
            Dimension::XAttr => "xAttr",
            Dimension::XReact => "xReact",
            Dimension::OReact => "oReact",
            Dimension::XIntent => "xIntent",
            Dimension::XWant => "xWant",
            Dimension::XNeed => "xNeed",
        }
    }
}

/// Maps an axis to its dimensions and the sentence role it applies to.
///
/// Sentences where the protagonist is the agent carry attributes, own
/// reactions, others' reactions, and motivations; sentences where another
/// character acts carry the protagonist-side reaction (`oReact`).
pub fn axis_to_dimensions(axis: SocialAxis) -> (&'static [Dimension], SentenceRole) {
    match axis {
        SocialAxis::Attributes => (&[Dimension::XAttr], SentenceRole::ProtAgent),
        SocialAxis::MentalState => (&[Dimension::XReact], SentenceRole::ProtAgent),
        SocialAxis::ImpactOnOthers => (&[Dimension::OReact], SentenceRole::ProtAgent),
        SocialAxis::ReactionToOthers => (&[Dimension::OReact], SentenceRole::OtherAgent),
        SocialAxis::Motivations => (
            &[Dimension::XIntent, Dimension::XWant, Dimension::XNeed],
            SentenceRole::ProtAgent,
        ),
    }
}

/// One commonsense inference result for a (story, sentence, axis, dimension).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceRecord {
    pub story_id: StoryId,
    pub sentence_index: usize,
    pub axis: SocialAxis,
    pub dimension: Dimension,
    pub phrases: Vec<String>,
    pub backend_id: String,
    pub backend_version: String,
}

/// Request sent to an inference backend. Serialized as-is on adapter wires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceRequest {
    pub sentence: String,
    pub dimension: Dimension,
    pub beam_size: usize,
}

/// Response from an inference backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceResponse {
    pub phrases: Vec<String>,
}

/// Commonsense inference strategy contract. Implementations must be
/// versioned so the cache never serves stale phrases across upgrades.
pub trait InferenceBackend: Send + Sync {
    fn id(&self) -> &str;
    fn version(&self) -> &str;
    fn infer(&self, request: &InferenceRequest) -> Result<InferenceResponse, BackendError>;
    /// Maximum accepted sentence length in characters, if limited.
    fn max_input_chars(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("inference backend {backend} failed: {source}")]
    Backend {
        backend: String,
        #[source]
        source: BackendError,
    },
    #[error("cache I/O error at {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache journal {path}:{line} is corrupt: {reason}")]
    CacheCorrupt {
        path: String,
        line: usize,
        reason: String,
    },
}

/// Cache key: the exact sentence hash plus dimension and backend identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub sentence_hash: String,
    pub dimension: Dimension,
    pub backend_id: String,
    pub backend_version: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct JournalEntry {
    #[serde(flatten)]
    key: CacheKey,
    phrases: Vec<String>,
}

/// Append-only JSONL journal of backend outputs, replayed on open and
/// compacted on demand. Reads may be concurrent; writes are serialized.
pub struct InferenceCache {
    path: Option<PathBuf>,
    state: Mutex<CacheState>,
}

struct CacheState {
    entries: HashMap<CacheKey, Vec<String>>,
    writer: Option<File>,
}

impl InferenceCache {
    /// Cache held only in memory; nothing is persisted.
    pub fn in_memory() -> Self {
        InferenceCache {
            path: None,
            state: Mutex::new(CacheState {
                entries: HashMap::new(),
                writer: None,
            }),
        }
    }

    /// Opens (or creates) a journal file and replays it.
    pub fn open(path: &Path) -> Result<Self, InferenceError> {
        let shown = path.display().to_string();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|source| InferenceError::CacheIo {
                path: shown.clone(),
                source,
            })?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|source| InferenceError::CacheIo {
                    path: shown.clone(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: JournalEntry =
                    serde_json::from_str(&line).map_err(|e| InferenceError::CacheCorrupt {
                        path: shown.clone(),
                        line: idx + 1,
                        reason: e.to_string(),
                    })?;
                entries.insert(entry.key, entry.phrases);
            }
        }
        let writer = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| InferenceError::CacheIo {
                path: shown,
                source,
            })?;
        Ok(InferenceCache {
            path: Some(path.to_path_buf()),
            state: Mutex::new(CacheState {
                entries,
                writer: Some(writer),
            }),
        })
    }

    pub fn get(&self, key: &CacheKey) -> Option<Vec<String>> {
        self.state.lock().expect("cache lock").entries.get(key).cloned()
    }

    pub fn put(&self, key: CacheKey, phrases: Vec<String>) -> Result<(), InferenceError> {
        let mut state = self.state.lock().expect("cache lock");
        if let Some(writer) = state.writer.as_mut() {
            let entry = JournalEntry {
                key: key.clone(),
                phrases: phrases.clone(),
            };
            let line = serde_json::to_string(&entry).expect("journal entry serializes");
            writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .map_err(|source| InferenceError::CacheIo {
                    path: self
                        .path
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_default(),
                    source,
                })?;
        }
        state.entries.insert(key, phrases);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rewrites the journal with one line per key, sorted, dropping
    /// superseded duplicates.
    pub fn compact(&self) -> Result<(), InferenceError> {
        let Some(path) = self.path.clone() else {
            return Ok(());
        };
        let shown = path.display().to_string();
        let mut state = self.state.lock().expect("cache lock");
        let mut keys: Vec<CacheKey> = state.entries.keys().cloned().collect();
        keys.sort();
        let tmp = path.with_extension("tmp");
        {
            let mut file = File::create(&tmp).map_err(|source| InferenceError::CacheIo {
                path: shown.clone(),
                source,
            })?;
            for key in keys {
                let entry = JournalEntry {
                    phrases: state.entries[&key].clone(),
                    key,
                };
                let line = serde_json::to_string(&entry).expect("journal entry serializes");
                file.write_all(line.as_bytes())
                    .and_then(|_| file.write_all(b"\n"))
                    .map_err(|source| InferenceError::CacheIo {
                        path: shown.clone(),
                        source,
                    })?;
            }
        }
        std::fs::rename(&tmp, &path).map_err(|source| InferenceError::CacheIo {
            path: shown.clone(),
            source,
        })?;
        state.writer = Some(
            OpenOptions::new()
                .append(true)
                .open(&path)
                .map_err(|source| InferenceError::CacheIo {
                    path: shown,
                    source,
                })?,
        );
        Ok(())
    }
}

/// Fetches inference phrases for one sentence and dimension, consulting and
/// populating the cache. Sentences beyond the backend's length limit are
/// truncated with a warning.
pub fn infer(
    sentence_text: &str,
    dimension: Dimension,
    backend: &dyn InferenceBackend,
    cache: &InferenceCache,
    beam_size: usize,
) -> Result<Vec<String>, InferenceError> {
    let mut sentence = sentence_text;
    let truncated;
    if let Some(max) = backend.max_input_chars() {
        if sentence.chars().count() > max {
            let end: usize = sentence
                .char_indices()
                .nth(max)
                .map(|(b, _)| b)
                .unwrap_or(sentence.len());
            truncated = &sentence[..end];
            log::warn!(
                "sentence truncated to {max} chars for backend {}",
                backend.id()
            );
            sentence = truncated;
        }
    }
    let key = CacheKey {
        sentence_hash: sha256_hex(sentence.as_bytes()),
        dimension,
        backend_id: backend.id().to_string(),
        backend_version: backend.version().to_string(),
    };
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let response = backend
        .infer(&InferenceRequest {
            sentence: sentence.to_string(),
            dimension,
            beam_size,
        })
        .map_err(|source| InferenceError::Backend {
            backend: backend.id().to_string(),
            source,
        })?;
    cache.put(key, response.phrases.clone())?;
    Ok(response.phrases)
}

/// Function words dropped when lowering inference phrases to content tokens.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "being", "by", "for", "from", "had",
    "has", "have", "in", "is", "it", "its", "none", "of", "on", "or", "that", "the", "this",
    "to", "was", "were", "with",
];

/// Lowercases, splits on whitespace, and drops stopwords and
/// punctuation-only tokens. Order and multiplicity are preserved;
/// hyphenated tokens stay whole. Idempotent.
pub fn normalize_phrases<S: AsRef<str>>(phrases: &[S]) -> Vec<String> {
    let mut tokens = Vec::new();
    for phrase in phrases {
        for word in phrase.as_ref().split_whitespace() {
            let lower = word.to_lowercase();
            if STOPWORDS.contains(&lower.as_str()) {
                continue;
            }
            if lower.chars().all(|c| !c.is_alphanumeric()) {
                continue;
            }
            tokens.push(lower);
        }
    }
    tokens
}

/// One failed story inside a pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassFailure {
    pub story_id: StoryId,
    pub error: String,
    pub retriable: bool,
}

/// Outcome of [`run_inference_pass`]: records plus failure and skip counts.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct PassOutcome {
    pub records: Vec<InferenceRecord>,
    pub failures: Vec<PassFailure>,
    pub skipped_unresolved: usize,
    pub skipped_unannotated: usize,
}

/// Runs inference over every annotated, gender-resolved story in the
/// (anonymized) corpus. One record per eligible (sentence, axis, dimension),
/// ordered by (story_id, sentence_index, axis, dimension). Backend failures
/// drop the whole story and are reported, not fatal.
pub fn run_inference_pass(
    corpus: &Corpus,
    annotations: &[ProtagonistAnnotation],
    backend: &dyn InferenceBackend,
    cache: &InferenceCache,
    beam_size: usize,
) -> PassOutcome {
    let by_id: HashMap<&StoryId, &ProtagonistAnnotation> =
        annotations.iter().map(|a| (&a.story_id, a)).collect();
    let mut outcome = PassOutcome::default();
    let mut stories: Vec<_> = corpus.stories.iter().collect();
    stories.sort_by(|a, b| a.story_id.cmp(&b.story_id));

    for story in stories {
        let Some(annotation) = by_id.get(&story.story_id) else {
            outcome.skipped_unannotated += 1;
            continue;
        };
        if annotation.gender == Gender::Unresolved {
            outcome.skipped_unresolved += 1;
            continue;
        }
        let mut story_records = Vec::new();
        let mut failed = None;
        'axes: for axis in SocialAxis::ALL {
            let (dimensions, role) = axis_to_dimensions(axis);
            for sentence in &story.sentences {
                let Some(&sentence_role) = annotation.sentence_roles.get(sentence.index) else {
                    continue;
                };
                if sentence_role != role {
                    continue;
                }
                for &dimension in dimensions {
                    match infer(&sentence.text, dimension, backend, cache, beam_size) {
                        Ok(phrases) => {
                            let phrases: Vec<String> = phrases
                                .into_iter()
                                .filter(|p| !p.trim().eq_ignore_ascii_case("none"))
                                .collect();
                            story_records.push(InferenceRecord {
                                story_id: story.story_id.clone(),
                                sentence_index: sentence.index,
                                axis,
                                dimension,
                                phrases,
                                backend_id: backend.id().to_string(),
                                backend_version: backend.version().to_string(),
                            });
                        }
                        Err(e) => {
                            failed = Some(e);
                            break 'axes;
                        }
                    }
                }
            }
        }
        match failed {
            Some(e) => {
                let retriable = match &e {
                    InferenceError::Backend { source, .. } => source.is_retriable(),
                    _ => false,
                };
                outcome.failures.push(PassFailure {
                    story_id: story.story_id.clone(),
                    error: e.to_string(),
                    retriable,
                });
            }
            None => outcome.records.append(&mut story_records),
        }
    }
    outcome
        .records
        .sort_by(|a, b| {
            (&a.story_id, a.sentence_index, a.axis, a.dimension).cmp(&(
                &b.story_id,
                b.sentence_index,
                b.axis,
                b.dimension,
            ))
        });
    outcome
}

/// Writes inference records as JSONL with stable key order.
pub fn write_records(records: &[InferenceRecord], path: &Path) -> Result<(), InferenceError> {
    let shown = path.display().to_string();
    let mut file = File::create(path).map_err(|source| InferenceError::CacheIo {
        path: shown.clone(),
        source,
    })?;
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        file.write_all(line.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|source| InferenceError::CacheIo {
                path: shown.clone(),
                source,
            })?;
    }
    Ok(())
}

/// Reads an inference record dump written by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<InferenceRecord>, InferenceError> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| InferenceError::CacheIo {
        path: shown.clone(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| InferenceError::CacheIo {
            path: shown.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InferenceRecord =
            serde_json::from_str(&line).map_err(|e| InferenceError::CacheCorrupt {
                path: shown.clone(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::StubBackend;
    use crate::corpus::{SentenceSplitter, Source, Story};
    use crate::protagonist::ClusterId;

    fn annotation(id: &str, gender: Gender, roles: Vec<SentenceRole>) -> ProtagonistAnnotation {
        ProtagonistAnnotation {
            story_id: id.into(),
            protagonist_cluster: ClusterId(0),
            gender,
            pronoun_counts: Default::default(),
            sentence_roles: roles,
        }
    }

    fn two_sentence_corpus() -> Corpus {
        let story = Story::from_text(
            "s1",
            "T",
            "PersonX won the race. PersonX smiled.",
            Source::Generated,
            &SentenceSplitter::default(),
        )
        .unwrap();
        Corpus {
            name: "t".into(),
            provenance: "test".into(),
            stories: vec![story],
        }
    }

    #[test]
    fn mapping_matches_the_axis_listing() {
        assert_eq!(
            axis_to_dimensions(SocialAxis::Attributes),
            (&[Dimension::XAttr][..], SentenceRole::ProtAgent)
        );
        assert_eq!(
            axis_to_dimensions(SocialAxis::MentalState),
            (&[Dimension::XReact][..], SentenceRole::ProtAgent)
        );
        assert_eq!(
            axis_to_dimensions(SocialAxis::ImpactOnOthers),
            (&[Dimension::OReact][..], SentenceRole::ProtAgent)
        );
        assert_eq!(
            axis_to_dimensions(SocialAxis::ReactionToOthers),
            (&[Dimension::OReact][..], SentenceRole::OtherAgent)
        );
        assert_eq!(
            axis_to_dimensions(SocialAxis::Motivations),
            (
                &[Dimension::XIntent, Dimension::XWant, Dimension::XNeed][..],
                SentenceRole::ProtAgent
            )
        );
    }

    #[test]
    fn every_axis_has_dimensions_and_one_role() {
        for axis in SocialAxis::ALL {
            let (dims, _role) = axis_to_dimensions(axis);
            assert!(!dims.is_empty());
        }
    }

    #[test]
    fn stub_fixture_is_returned_verbatim() {
        let backend = StubBackend::new().with_fixture(
            "PersonX won the race.",
            Dimension::XAttr,
            vec!["competitive".into(), "athletic".into()],
        );
        let cache = InferenceCache::in_memory();
        let phrases = infer("PersonX won the race.", Dimension::XAttr, &backend, &cache, 5).unwrap();
        assert_eq!(phrases, vec!["competitive", "athletic"]);
    }

    #[test]
    fn second_identical_call_hits_the_cache() {
        let backend = StubBackend::new();
        let cache = InferenceCache::in_memory();
        let first = infer("PersonX cried.", Dimension::XAttr, &backend, &cache, 5).unwrap();
        assert_eq!(backend.calls(), 1);
        let second = infer("PersonX cried.", Dimension::XAttr, &backend, &cache, 5).unwrap();
        assert_eq!(backend.calls(), 1, "cache hit must not invoke the backend");
        assert_eq!(first, second);
    }

    #[test]
    fn normalization_drops_stopwords_and_sentinels() {
        assert_eq!(normalize_phrases(&["to be happy"]), vec!["happy"]);
        assert!(normalize_phrases(&["none"]).is_empty());
        assert_eq!(normalize_phrases(&["hard-working"]), vec!["hard-working"]);
        assert_eq!(
            normalize_phrases(&["to win , the race !"]),
            vec!["win", "race"]
        );
    }

    #[test]
    fn normalization_is_idempotent() {
        let once = normalize_phrases(&["To Be Happy", "NONE", "tired of it all"]);
        let twice = normalize_phrases(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn pass_produces_counts_per_mapping_table() {
        let corpus = two_sentence_corpus();
        let anns = vec![annotation(
            "s1",
            Gender::Female,
            vec![SentenceRole::ProtAgent, SentenceRole::ProtAgent],
        )];
        let backend = StubBackend::new();
        let cache = InferenceCache::in_memory();
        let outcome = run_inference_pass(&corpus, &anns, &backend, &cache, 5);
        assert!(outcome.failures.is_empty());
        let count_for = |axis: SocialAxis| {
            outcome
                .records
                .iter()
                .filter(|r| r.axis == axis)
                .count()
        };
        assert_eq!(count_for(SocialAxis::Attributes), 2);
        assert_eq!(count_for(SocialAxis::MentalState), 2);
        assert_eq!(count_for(SocialAxis::ImpactOnOthers), 2);
        assert_eq!(count_for(SocialAxis::ReactionToOthers), 0);
        assert_eq!(count_for(SocialAxis::Motivations), 6);
    }

    #[test]
    fn unresolved_stories_are_skipped() {
        let corpus = two_sentence_corpus();
        let anns = vec![annotation(
            "s1",
            Gender::Unresolved,
            vec![SentenceRole::ProtAgent, SentenceRole::ProtAgent],
        )];
        let backend = StubBackend::new();
        let cache = InferenceCache::in_memory();
        let outcome = run_inference_pass(&corpus, &anns, &backend, &cache, 5);
        assert!(outcome.records.is_empty());
        assert_eq!(outcome.skipped_unresolved, 1);
    }

    #[test]
    fn warm_cache_rerun_is_identical_with_zero_calls() {
        let corpus = two_sentence_corpus();
        let anns = vec![annotation(
            "s1",
            Gender::Male,
            vec![SentenceRole::ProtAgent, SentenceRole::OtherAgent],
        )];
        let backend = StubBackend::new();
        let cache = InferenceCache::in_memory();
        let cold = run_inference_pass(&corpus, &anns, &backend, &cache, 5);
        let calls_after_cold = backend.calls();
        assert!(calls_after_cold > 0);
        let warm = run_inference_pass(&corpus, &anns, &backend, &cache, 5);
        assert_eq!(backend.calls(), calls_after_cold);
        assert_eq!(cold.records, warm.records);
    }

    #[test]
    fn cache_journal_survives_reopen_and_compaction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let key = CacheKey {
            sentence_hash: sha256_hex(b"PersonX ran."),
            dimension: Dimension::XAttr,
            backend_id: "stub".into(),
            backend_version: "1".into(),
        };
        {
            let cache = InferenceCache::open(&path).unwrap();
            cache.put(key.clone(), vec!["fast".into()]).unwrap();
            cache.put(key.clone(), vec!["quick".into()]).unwrap();
        }
        let cache = InferenceCache::open(&path).unwrap();
        assert_eq!(cache.get(&key), Some(vec!["quick".to_string()]));
        cache.compact().unwrap();
        let lines = std::fs::read_to_string(&path).unwrap();
        assert_eq!(lines.lines().count(), 1);
        let cache = InferenceCache::open(&path).unwrap();
        assert_eq!(cache.get(&key), Some(vec!["quick".to_string()]));
    }

    #[test]
    fn records_round_trip_through_jsonl() {
        let records = vec![InferenceRecord {
            story_id: "s1".into(),
            sentence_index: 0,
            axis: SocialAxis::Attributes,
            dimension: Dimension::XAttr,
            phrases: vec!["brave".into()],
            backend_id: "stub".into(),
            backend_version: "1".into(),
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        write_records(&records, &path).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
    }

    #[test]
    fn truncation_applies_backend_limit() {
        struct Limited(StubBackend);
        impl InferenceBackend for Limited {
            fn id(&self) -> &str {
                "limited"
            }
            fn version(&self) -> &str {
                "1"
            }
            fn infer(&self, request: &InferenceRequest) -> Result<InferenceResponse, BackendError> {
                assert!(request.sentence.chars().count() <= 10);
                self.0.infer(request)
            }
            fn max_input_chars(&self) -> Option<usize> {
                Some(10)
            }
        }
        let backend = Limited(StubBackend::new());
        let cache = InferenceCache::in_memory();
        let phrases = infer(
            "This sentence is much longer than ten characters.",
            Dimension::XReact,
            &backend,
            &cache,
            5,
        )
        .unwrap();
        assert!(!phrases.is_empty());
    }
}
