//! Valence/arousal affect lexicon, loaded from `word<TAB>valence<TAB>arousal`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::LexiconError;

fn field_or_err<'a>(
    field: Option<&'a str>,
    what: &str,
    path: &str,
    line: usize,
) -> Result<&'a str, LexiconError> {
    field
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .ok_or_else(|| LexiconError::Parse {
            path: path.to_string(),
            line,
            reason: format!("missing {what} field"),
        })
}

/// Per-word pleasure (valence) and excitement (arousal) intensities, each
/// in [0, 1].
#[derive(Debug, Clone, Default)]
pub struct AffectLexicon {
    entries: BTreeMap<String, (f64, f64)>,
}

impl AffectLexicon {
    pub fn from_entries<I>(entries: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (String, f64, f64)>,
    {
        let mut map = BTreeMap::new();
        for (word, valence, arousal) in entries {
            for value in [valence, arousal] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(LexiconError::ScoreOutOfRange { word, value });
                }
            }
            map.insert(word.to_lowercase(), (valence, arousal));
        }
        Ok(AffectLexicon { entries: map })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let shown = path.display().to_string();
        let contents = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: shown.clone(),
            source,
        })?;
        let mut entries = Vec::new();
        for (idx, line) in contents.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let word = field_or_err(fields.next(), "word", &shown, line_no)?;
            let valence: f64 = field_or_err(fields.next(), "valence", &shown, line_no)?
                .parse()
                .map_err(|e| LexiconError::Parse {
                    path: shown.clone(),
                    line: line_no,
                    reason: format!("bad valence: {e}"),
                })?;
            let arousal: f64 = field_or_err(fields.next(), "arousal", &shown, line_no)?
                .parse()
                .map_err(|e| LexiconError::Parse {
                    path: shown.clone(),
                    line: line_no,
                    reason: format!("bad arousal: {e}"),
                })?;
            entries.push((word.to_string(), valence, arousal));
        }
        AffectLexicon::from_entries(entries)
    }

    /// (valence, arousal) for `word`, lowercased.
    pub fn get(&self, word: &str) -> Option<(f64, f64)> {
        self.entries.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
