//! Story corpora: loading, validation, tokenization, and persistence.
//!
//! Sentence splitting and tokenization are rule-based and deterministic so
//! that downstream artifacts are bit-stable across runs. Token spans are
//! character offsets into the owning sentence, which lets anonymization
//! rewrite text losslessly.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protagonist::{Gender, ProtagonistAnnotation};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: invalid record {id}: {reason}")]
    InvalidRecord {
        path: String,
        line: usize,
        id: String,
        reason: String,
    },
    #[error("duplicate story id {id} at {path}:{line}")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("empty corpus: {path} contains no records")]
    EmptyCorpus { path: String },
    #[error("corpus file {path} is not valid JSON: {reason}")]
    BadArtifact { path: String, reason: String },
    #[error("annotation references unknown story id {0}")]
    UnknownStory(StoryId),
    #[error("story {0} has more than one annotation")]
    DuplicateAnnotation(StoryId),
}

/// Opaque story identifier, unique within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StoryId(pub String);

impl StoryId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for StoryId {
    fn from(s: &str) -> Self {
        StoryId(s.to_string())
    }
}

/// Where a story came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "GENERATED")]
    Generated,
    #[serde(rename = "HUMAN")]
    Human,
}

/// One token with its character span inside the sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
}

/// One sentence with deterministic token spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub story_id: StoryId,
    pub title: String,
    pub sentences: Vec<Sentence>,
    pub source: Source,
    pub token_count: usize,
}

impl Story {
    /// Builds a story from raw text, splitting sentences and tokenizing.
    pub fn from_text(
        id: impl Into<StoryId>,
        title: &str,
        text: &str,
        source: Source,
        splitter: &SentenceSplitter,
    ) -> Result<Self, String> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err("empty text".to_string());
        }
        let mut sentences = Vec::new();
        for (index, sent) in splitter.split(trimmed).into_iter().enumerate() {
            let tokens = tokenize(&sent);
            if tokens.is_empty() {
                return Err(format!("sentence {index} has no tokens"));
            }
            sentences.push(Sentence {
                index,
                text: sent,
                tokens,
            });
        }
        let token_count = sentences.iter().map(|s| s.tokens.len()).sum();
        Ok(Story {
            story_id: id.into(),
            title: title.to_string(),
            sentences,
            source,
            token_count,
        })
    }

    /// Full story text with sentences joined by single spaces.
    pub fn joined_text(&self) -> String {
        let parts: Vec<&str> = self.sentences.iter().map(|s| s.text.as_str()).collect();
        parts.join(" ")
    }

    /// Checks the structural invariants; returns the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.sentences.is_empty() {
            return Err("story has no sentences".into());
        }
        let mut total = 0usize;
        for sentence in &self.sentences {
            if sentence.tokens.is_empty() {
                return Err(format!("sentence {} has no tokens", sentence.index));
            }
            let char_len = sentence.text.chars().count();
            let mut prev_end = 0usize;
            for token in &sentence.tokens {
                if token.char_start < prev_end {
                    return Err(format!(
                        "overlapping token spans in sentence {}",
                        sentence.index
                    ));
                }
                if token.char_end > char_len || token.char_start >= token.char_end {
                    return Err(format!(
                        "token span out of bounds in sentence {}",
                        sentence.index
                    ));
                }
                prev_end = token.char_end;
            }
            total += sentence.tokens.len();
        }
        if total != self.token_count {
            return Err(format!(
                "token_count {} != sum of sentence tokens {}",
                self.token_count, total
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub provenance: String,
    pub stories: Vec<Story>,
}

impl Corpus {
    pub fn story(&self, id: &StoryId) -> Option<&Story> {
        self.stories.iter().find(|s| &s.story_id == id)
    }
}

/// Input file formats accepted by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

/// Rule-based sentence splitter: breaks after `.`, `!`, or `?` followed by
/// whitespace, unless the word before a period is a configured abbreviation
/// or a single letter (initials).
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: BTreeSet<String>,
}

const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "dr", "e.g", "etc", "i.e", "jr", "mr", "mrs", "ms", "prof", "sr", "st", "vs",
];

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter {
            abbreviations: DEFAULT_ABBREVIATIONS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl SentenceSplitter {
    pub fn with_abbreviations<I: IntoIterator<Item = String>>(abbrs: I) -> Self {
        SentenceSplitter {
            abbreviations: abbrs.into_iter().map(|a| a.to_lowercase()).collect(),
        }
    }

    /// Splits `text` into sentences. Inter-sentence whitespace is dropped;
    /// terminal punctuation stays with its sentence.
    pub fn split(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let mut sentences = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let c = chars[i];
            if c == '.' || c == '!' || c == '?' {
                // Consume a run of terminal punctuation ("?!", "...").
                let mut end = i + 1;
                while end < chars.len() && matches!(chars[end], '.' | '!' | '?') {
                    end += 1;
                }
                let followed_by_space = end >= chars.len() || chars[end].is_whitespace();
                let blocked = c == '.' && end == i + 1 && self.is_abbreviation(&chars[..i]);
                if followed_by_space && !blocked {
                    let sent: String = chars[start..end].iter().collect();
                    let sent = sent.trim().to_string();
                    if !sent.is_empty() {
                        sentences.push(sent);
                    }
                    i = end;
                    while i < chars.len() && chars[i].is_whitespace() {
                        i += 1;
                    }
                    start = i;
                    continue;
                }
                i = end;
            } else {
                i += 1;
            }
        }
        if start < chars.len() {
            let sent: String = chars[start..].iter().collect();
            let sent = sent.trim().to_string();
            if !sent.is_empty() {
                sentences.push(sent);
            }
        }
        sentences
    }

    fn is_abbreviation(&self, before: &[char]) -> bool {
        let mut word: Vec<char> = Vec::new();
        for &c in before.iter().rev() {
            if c.is_alphabetic() || c == '.' {
                word.push(c);
            } else {
                break;
            }
        }
        if word.is_empty() {
            return false;
        }
        word.reverse();
        // Single letters read as initials ("J. Smith").
        if word.len() == 1 && word[0].is_alphabetic() {
            return true;
        }
        let word: String = word.iter().collect::<String>().to_lowercase();
        self.abbreviations.contains(word.trim_matches('.'))
    }
}

/// Whitespace tokenization with leading/trailing punctuation detached, one
/// character per punctuation token. Internal punctuation (hyphens,
/// apostrophes) stays inside the token. Spans are character offsets.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let word_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let word_end = i;
        let mut core_start = word_start;
        let mut core_end = word_end;
        while core_start < core_end && is_detachable(chars[core_start]) {
            core_start += 1;
        }
        while core_end > core_start && is_detachable(chars[core_end - 1]) {
            core_end -= 1;
        }
        for p in word_start..core_start {
            tokens.push(span_token(&chars, p, p + 1));
        }
        if core_start < core_end {
            tokens.push(span_token(&chars, core_start, core_end));
        }
        for p in core_end..word_end {
            tokens.push(span_token(&chars, p, p + 1));
        }
    }
    tokens
}

fn span_token(chars: &[char], start: usize, end: usize) -> Token {
    Token {
        surface: chars[start..end].iter().collect(),
        char_start: start,
        char_end: end,
    }
}

fn is_detachable(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}')
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    title: String,
    text: String,
    source: Source,
}

/// Loads a raw story file into a [`Corpus`] with the default splitter.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    load_corpus_with(path, format, &SentenceSplitter::default())
}

/// Loads a raw story file, splitting sentences with `splitter`.
pub fn load_corpus_with(
    path: &Path,
    format: CorpusFormat,
    splitter: &SentenceSplitter,
) -> Result<Corpus, CorpusError> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: shown.clone(),
        source,
    })?;
    let records = match format {
        CorpusFormat::Jsonl => read_jsonl(file, &shown)?,
        CorpusFormat::Csv => read_csv(file, &shown)?,
    };
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus { path: shown });
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut stories = Vec::with_capacity(records.len());
    for (line, record) in records {
        if seen.insert(record.id.clone(), line).is_some() {
            return Err(CorpusError::DuplicateId {
                path: shown,
                line,
                id: record.id,
            });
        }
        let story = Story::from_text(
            record.id.as_str(),
            &record.title,
            &record.text,
            record.source,
            splitter,
        )
        .map_err(|reason| CorpusError::InvalidRecord {
            path: shown.clone(),
            line,
            id: record.id.clone(),
            reason,
        })?;
        stories.push(story);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| shown.clone());
    let provenance = format!(
        "{file_name} ({})",
        match format {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Csv => "csv",
        }
    );
    Ok(Corpus {
        name,
        provenance,
        stories,
    })
}

fn read_jsonl(file: File, shown: &str) -> Result<Vec<(usize, RawRecord)>, CorpusError> {
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: shown.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: shown.to_string(),
                line: line_no,
                reason: e.to_string(),
            })?;
        records.push((line_no, record));
    }
    Ok(records)
}

fn read_csv(file: File, shown: &str) -> Result<Vec<(usize, RawRecord)>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    {
        let headers = reader.headers().map_err(|e| CorpusError::Malformed {
            path: shown.to_string(),
            line: 1,
            reason: e.to_string(),
        })?;
        let expected = ["id", "title", "text", "source"];
        for field in expected {
            if !headers.iter().any(|h| h == field) {
                return Err(CorpusError::Malformed {
                    path: shown.to_string(),
                    line: 1,
                    reason: format!("missing CSV header column {field:?}"),
                });
            }
        }
    }
    let mut records = Vec::new();
    for result in reader.deserialize::<RawRecord>() {
        let record = result.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            CorpusError::Malformed {
                path: shown.to_string(),
                line,
                reason: e.to_string(),
            }
        })?;
        let line = records.len() + 2; // header occupies line 1
        records.push((line, record));
    }
    Ok(records)
}

/// Writes the full-fidelity corpus artifact (pretty JSON plus newline).
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let shown = path.display().to_string();
    let mut file = File::create(path).map_err(|source| CorpusError::Io {
        path: shown.clone(),
        source,
    })?;
    let json = serde_json::to_string_pretty(corpus).expect("corpus serializes");
    file.write_all(json.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|source| CorpusError::Io {
            path: shown,
            source,
        })
}

/// Reads a corpus artifact produced by [`save_corpus`].
pub fn read_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let shown = path.display().to_string();
    let mut file = File::open(path).map_err(|source| CorpusError::Io {
        path: shown.clone(),
        source,
    })?;
    let mut buf = String::new();
    file.read_to_string(&mut buf).map_err(|source| CorpusError::Io {
        path: shown.clone(),
        source,
    })?;
    let corpus: Corpus = serde_json::from_str(&buf).map_err(|e| CorpusError::BadArtifact {
        path: shown.clone(),
        reason: e.to_string(),
    })?;
    for story in &corpus.stories {
        if let Err(reason) = story.validate() {
            return Err(CorpusError::BadArtifact {
                path: shown,
                reason: format!("story {}: {reason}", story.story_id),
            });
        }
    }
    Ok(corpus)
}

/// Per-gender story counts plus the corpus-wide mean token count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub stories: usize,
    pub annotated: usize,
    pub female: usize,
    pub male: usize,
    pub unresolved: usize,
    pub mean_tokens: f64,
}

/// Counts annotated stories per gender label and the mean token count over
/// the whole corpus. Each story may carry at most one annotation.
pub fn corpus_stats(
    corpus: &Corpus,
    annotations: &[ProtagonistAnnotation],
) -> Result<StatsSummary, CorpusError> {
    let ids: BTreeSet<&StoryId> = corpus.stories.iter().map(|s| &s.story_id).collect();
    let mut seen: BTreeSet<&StoryId> = BTreeSet::new();
    let mut female = 0usize;
    let mut male = 0usize;
    let mut unresolved = 0usize;
    for ann in annotations {
        if !ids.contains(&ann.story_id) {
            return Err(CorpusError::UnknownStory(ann.story_id.clone()));
        }
        if !seen.insert(&ann.story_id) {
            return Err(CorpusError::DuplicateAnnotation(ann.story_id.clone()));
        }
        match ann.gender {
            Gender::Female => female += 1,
            Gender::Male => male += 1,
            Gender::Unresolved => unresolved += 1,
        }
    }
    let total_tokens: usize = corpus.stories.iter().map(|s| s.token_count).sum();
    let mean_tokens = if corpus.stories.is_empty() {
        0.0
    } else {
        total_tokens as f64 / corpus.stories.len() as f64
    };
    Ok(StatsSummary {
        stories: corpus.stories.len(),
        annotated: annotations.len(),
        female,
        male,
        unresolved,
        mean_tokens,
    })
}
