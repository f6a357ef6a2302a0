//! Deterministic stand-in for a live commonsense model: answers from a
//! fixture table when one matches, otherwise synthesizes phrases from fixed
//! per-dimension vocabularies keyed by a hash of the input. Useful for
//! tests and for exercising the full pipeline without model weights.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Deserialize;

use crate::backends::BackendError;
use crate::inference::{Dimension, InferenceBackend, InferenceRequest, InferenceResponse};
use crate::util::sha256_hex;

const ATTRIBUTES: &[&str] = &[
    "determined", "careful", "curious", "brave", "generous", "anxious", "tired", "proud",
    "clever", "cautious", "stubborn", "cheerful",
];
const SELF_REACTIONS: &[&str] = &[
    "happy", "satisfied", "proud", "relieved", "excited", "sad", "upset", "nervous", "calm",
    "angry", "content", "hopeful",
];
const OTHER_REACTIONS: &[&str] = &[
    "grateful", "happy", "annoyed", "impressed", "worried", "pleased", "surprised", "angry",
    "comforted", "jealous", "amused", "hurt",
];
const INTENTS: &[&str] = &[
    "to have fun", "to feel better", "to help others", "to make money", "to be successful",
    "to learn something", "to stay safe", "to impress others", "to save time", "to find love",
];
const WANTS: &[&str] = &[
    "to celebrate", "to rest at home", "to tell friends", "to try again",
    "to buy something nice", "to go outside", "to finish the job", "to see family",
    "to win again", "to relax",
];
const NEEDS: &[&str] = &[
    "to make a plan", "to practice hard", "to get dressed", "to save money",
    "to ask for help", "to leave early", "to find the keys", "to study first",
    "to pack a bag", "to call ahead",
];

fn vocabulary(dimension: Dimension) -> &'static [&'static str] {
    match dimension {
        Dimension::XAttr => ATTRIBUTES,
        Dimension::XReact => SELF_REACTIONS,
        Dimension::OReact => OTHER_REACTIONS,
        Dimension::XIntent => INTENTS,
        Dimension::XWant => WANTS,
        Dimension::XNeed => NEEDS,
    }
}

#[derive(Debug, Deserialize)]
struct FixtureEntry {
    sentence: String,
    dimension: Dimension,
    phrases: Vec<String>,
}

/// Fixture-table inference backend with deterministic synthesis fallback.
#[derive(Debug, Default)]
pub struct StubBackend {
    fixtures: HashMap<(String, Dimension), Vec<String>>,
    calls: AtomicUsize,
}

impl StubBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fixture(
        mut self,
        sentence: &str,
        dimension: Dimension,
        phrases: Vec<String>,
    ) -> Self {
        self.fixtures
            .insert((sentence.to_string(), dimension), phrases);
        self
    }

    /// Loads a JSON fixture file: `[{"sentence", "dimension", "phrases"}]`.
    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let contents = fs::read_to_string(path).map_err(BackendError::Io)?;
        let entries: Vec<FixtureEntry> = serde_json::from_str(&contents)
            .map_err(|e| BackendError::Config(format!("bad stub fixture file: {e}")))?;
        let mut backend = Self::new();
        for entry in entries {
            backend
                .fixtures
                .insert((entry.sentence, entry.dimension), entry.phrases);
        }
        Ok(backend)
    }

    /// Number of `infer` invocations; lets tests observe the cache contract.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn synthesize(sentence: &str, dimension: Dimension, beam_size: usize) -> Vec<String> {
        let vocab = vocabulary(dimension);
        let digest = sha256_hex(format!("{sentence}|{}", dimension.code()).as_bytes());
        let mut picks = Vec::new();
        for pair in digest.as_bytes().chunks(2) {
            let hex = std::str::from_utf8(pair).expect("hex digest");
            let byte = u8::from_str_radix(hex, 16).expect("hex digest");
            let candidate = vocab[byte as usize % vocab.len()].to_string();
            if !picks.contains(&candidate) {
                picks.push(candidate);
            }
            if picks.len() == beam_size.min(vocab.len()) {
                break;
            }
        }
        picks
    }
}

impl InferenceBackend for StubBackend {
    fn id(&self) -> &str {
        "stub"
    }

    fn version(&self) -> &str {
        "1"
    }

    fn infer(&self, request: &InferenceRequest) -> Result<InferenceResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = (request.sentence.clone(), request.dimension);
        let phrases = match self.fixtures.get(&key) {
            Some(phrases) => phrases.clone(),
            None => Self::synthesize(&request.sentence, request.dimension, request.beam_size),
        };
        Ok(InferenceResponse { phrases })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_win_over_synthesis() {
        let backend = StubBackend::new().with_fixture(
            "PersonX won the race.",
            Dimension::XAttr,
            vec!["competitive".into(), "athletic".into()],
        );
        let response = backend
            .infer(&InferenceRequest {
                sentence: "PersonX won the race.".into(),
                dimension: Dimension::XAttr,
                beam_size: 5,
            })
            .unwrap();
        assert_eq!(response.phrases, vec!["competitive", "athletic"]);
    }

    #[test]
    fn synthesis_is_deterministic_and_beam_sized() {
        let a = StubBackend::synthesize("PersonX cried.", Dimension::XReact, 5);
        let b = StubBackend::synthesize("PersonX cried.", Dimension::XReact, 5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let other = StubBackend::synthesize("PersonX laughed.", Dimension::XReact, 5);
        assert_ne!(a, other);
    }

    #[test]
    fn fixture_file_parses() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write as _;
        f.write_all(
            br#"[{"sentence": "PersonX ran.", "dimension": "xAttr", "phrases": ["fast"]}]"#,
        )
        .unwrap();
        f.flush().unwrap();
        let backend = StubBackend::from_file(f.path()).unwrap();
        let response = backend
            .infer(&InferenceRequest {
                sentence: "PersonX ran.".into(),
                dimension: Dimension::XAttr,
                beam_size: 5,
            })
            .unwrap();
        assert_eq!(response.phrases, vec!["fast"]);
    }
}
