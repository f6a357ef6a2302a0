//! Category dictionaries in the `.dic` layout: a `%`-delimited header
//! mapping numeric indices to category names, then one pattern per line with
//! the indices it belongs to. Patterns are literal words or prefixes with a
//! trailing `*`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use super::LexiconError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Literal(String),
    Prefix(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> Result<Self, LexiconError> {
        let raw = raw.to_lowercase();
        match raw.find('*') {
            None => Ok(Pattern::Literal(raw)),
            Some(pos) if pos == raw.len() - 1 => {
                Ok(Pattern::Prefix(raw[..pos].to_string()))
            }
            Some(_) => Err(LexiconError::BadPattern(raw)),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Literal(word) => token == word,
            Pattern::Prefix(prefix) => token.starts_with(prefix.as_str()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CategoryDictionary {
    categories: BTreeMap<String, Vec<Pattern>>,
}

impl CategoryDictionary {
    pub fn from_patterns<I, S>(categories: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (String, Vec<S>)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (name, raw_patterns) in categories {
            let mut patterns = Vec::with_capacity(raw_patterns.len());
            for raw in raw_patterns {
                patterns.push(Pattern::parse(raw.as_ref())?);
            }
            map.insert(name, patterns);
        }
        Ok(CategoryDictionary { categories: map })
    }

    pub fn load_dic(path: &Path) -> Result<Self, LexiconError> {
        let shown = path.display().to_string();
        let contents = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: shown.clone(),
            source,
        })?;
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        let mut categories: BTreeMap<String, Vec<Pattern>> = BTreeMap::new();
        let mut in_header = false;
        let mut header_seen = false;
        for (idx, line) in contents.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "%" {
                if header_seen && !in_header {
                    return Err(LexiconError::Parse {
                        path: shown,
                        line: line_no,
                        reason: "unexpected extra header section".to_string(),
                    });
                }
                in_header = !in_header;
                header_seen = true;
                continue;
            }
            if in_header {
                let mut parts = line.split_whitespace();
                let index = parts.next().unwrap_or_default();
                let name = parts.collect::<Vec<_>>().join(" ");
                if index.parse::<usize>().is_err() || name.is_empty() {
                    return Err(LexiconError::Parse {
                        path: shown,
                        line: line_no,
                        reason: "header lines must be `<index> <category name>`".to_string(),
                    });
                }
                names.insert(index.to_string(), name.clone());
                categories.entry(name).or_default();
            } else {
                let mut parts = line.split_whitespace();
                let raw = parts.next().unwrap_or_default();
                let pattern = Pattern::parse(raw)?;
                let mut any = false;
                for index in parts {
                    let name = names.get(index).ok_or_else(|| LexiconError::Parse {
                        path: shown.clone(),
                        line: line_no,
                        reason: format!("unknown category index {index:?}"),
                    })?;
                    categories
                        .get_mut(name)
                        .expect("category registered in header")
                        .push(pattern.clone());
                    any = true;
                }
                if !any {
                    return Err(LexiconError::Parse {
                        path: shown,
                        line: line_no,
                        reason: "pattern line carries no category indices".to_string(),
                    });
                }
            }
        }
        if categories.is_empty() {
            return Err(LexiconError::EmptyLexicon(shown));
        }
        Ok(CategoryDictionary { categories })
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(|k| k.as_str())
    }

    pub fn patterns(&self, category: &str) -> Option<&[Pattern]> {
        self.categories.get(category).map(|p| p.as_slice())
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

/// All categories whose patterns match the (lowercase) token.
pub fn category_match(token: &str, dict: &CategoryDictionary) -> BTreeSet<String> {
    let mut hits = BTreeSet::new();
    for (name, patterns) in &dict.categories {
        if patterns.iter().any(|p| p.matches(token)) {
            hits.insert(name.clone());
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn sample() -> CategoryDictionary {
        CategoryDictionary::from_patterns([
            ("Money".to_string(), vec!["money", "cash", "pay*"]),
            ("Family".to_string(), vec!["famil*", "mother", "father"]),
        ])
        .unwrap()
    }

    #[test]
    fn literal_and_wildcard_matching() {
        let dict = sample();
        assert_eq!(
            category_match("money", &dict),
            BTreeSet::from(["Money".to_string()])
        );
        assert_eq!(
            category_match("families", &dict),
            BTreeSet::from(["Family".to_string()])
        );
        assert!(category_match("xyzzy", &dict).is_empty());
    }

    #[test]
    fn wildcard_must_be_terminal() {
        let err = Pattern::parse("fam*ly").unwrap_err();
        assert!(matches!(err, LexiconError::BadPattern(_)));
    }

    #[test]
    fn dic_layout_parses() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"%\n1\tMoney\n2\tFamily\n%\nmoney\t1\nfamil*\t2\nallowance\t1 2\n")
            .unwrap();
        f.flush().unwrap();
        let dict = CategoryDictionary::load_dic(f.path()).unwrap();
        assert_eq!(dict.len(), 2);
        assert_eq!(
            category_match("allowance", &dict),
            BTreeSet::from(["Money".to_string(), "Family".to_string()])
        );
    }

    #[test]
    fn unknown_index_is_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"%\n1\tMoney\n%\ncash\t9\n").unwrap();
        f.flush().unwrap();
        let err = CategoryDictionary::load_dic(f.path()).unwrap_err();
        assert!(matches!(err, LexiconError::Parse { line: 4, .. }));
    }
}
