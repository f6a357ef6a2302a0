//! Lexical resources: word embeddings, stereotype word lists, the
//! valence/arousal affect lexicon, and wildcard category dictionaries.
//!
//! All stores are immutable after load and safe to share across threads.

mod affect;
mod categories;
mod embeddings;
mod wordlist;

pub use affect::AffectLexicon;
pub use categories::{category_match, CategoryDictionary, Pattern};
pub use embeddings::{cosine, load_embeddings, EmbeddingFormat, EmbeddingStore};
pub use wordlist::Lexicon;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("dimension mismatch: expected {expected}, got {got}{}", word_suffix(word))]
    DimensionMismatch {
        expected: usize,
        got: usize,
        word: Option<String>,
    },
    #[error("zero vector for word {0:?} cannot take part in cosine operations")]
    ZeroVector(String),
    #[error("duplicate word {0:?}")]
    DuplicateWord(String),
    #[error("lexicon {0:?} is empty")]
    EmptyLexicon(String),
    #[error("affect score out of [0, 1] for word {word:?}: {value}")]
    ScoreOutOfRange { word: String, value: f64 },
    #[error("bad pattern {0:?}: wildcard is only allowed at the end")]
    BadPattern(String),
}

fn word_suffix(word: &Option<String>) -> String {
    match word {
        Some(w) => format!(" at word {w:?}"),
        None => String::new(),
    }
}
