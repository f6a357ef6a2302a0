//! Plain word-list lexicons (one word per line, `#` comments).

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::LexiconError;

/// A named set of lowercase words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    name: String,
    words: BTreeSet<String>,
}

impl Lexicon {
    pub fn new<I, S>(name: &str, words: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(LexiconError::EmptyLexicon(name.to_string()));
        }
        Ok(Lexicon {
            name: name.to_string(),
            words,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let shown = path.display().to_string();
        let contents = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: shown.clone(),
            source,
        })?;
        let words = contents
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or(shown);
        Lexicon::new(&name, words)
    }

    /// Union of several lexicons under a new name.
    pub fn union(name: &str, parts: &[&Lexicon]) -> Result<Self, LexiconError> {
        Lexicon::new(name, parts.iter().flat_map(|l| l.words.iter()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn words(&self) -> &BTreeSet<String> {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn loads_lowercases_and_dedupes() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"# strength words\nPower\npower\ndominant  # trailing comment\n\nforce\n")
            .unwrap();
        f.flush().unwrap();
        let lex = Lexicon::load(f.path()).unwrap();
        assert_eq!(lex.len(), 3);
        assert!(lex.contains("power"));
        assert!(lex.contains("dominant"));
        assert!(lex.contains("force"));
    }

    #[test]
    fn empty_file_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"# only comments\n").unwrap();
        f.flush().unwrap();
        assert!(matches!(
            Lexicon::load(f.path()),
            Err(LexiconError::EmptyLexicon(_))
        ));
    }

    #[test]
    fn union_merges_words() {
        let a = Lexicon::new("a", ["strong", "mighty"]).unwrap();
        let b = Lexicon::new("b", ["mighty", "bold"]).unwrap();
        let u = Lexicon::union("ab", &[&a, &b]).unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(u.name(), "ab");
    }
}
