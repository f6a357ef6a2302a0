//! Word-embedding store with text and binary word2vec loaders.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt};

use super::LexiconError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    TextW2v,
    BinaryW2v,
}

/// Fixed-dimension word vectors. Lookups lowercase the query first and fall
/// back to the exact form. Zero vectors are rejected at insertion so cosine
/// is always defined.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dimension: usize) -> Self {
        EmbeddingStore {
            dimension,
            vectors: HashMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<(), LexiconError> {
        if vector.len() != self.dimension {
            return Err(LexiconError::DimensionMismatch {
                expected: self.dimension,
                got: vector.len(),
                word: Some(word.to_string()),
            });
        }
        if vector.iter().all(|v| *v == 0.0) {
            return Err(LexiconError::ZeroVector(word.to_string()));
        }
        if self.vectors.contains_key(word) {
            return Err(LexiconError::DuplicateWord(word.to_string()));
        }
        self.vectors.insert(word.to_string(), vector);
        Ok(())
    }

    /// Lowercased lookup with exact-case fallback.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        let lower = word.to_lowercase();
        self.vectors
            .get(&lower)
            .or_else(|| self.vectors.get(word))
            .map(|v| v.as_slice())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(|k| k.as_str())
    }

    /// A copy with every vector multiplied by `alpha`. Cosine-based scores
    /// are invariant to this for `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> EmbeddingStore {
        let vectors = self
            .vectors
            .iter()
            .map(|(w, v)| (w.clone(), v.iter().map(|x| x * alpha).collect()))
            .collect();
        EmbeddingStore {
            dimension: self.dimension,
            vectors,
        }
    }

    /// Writes the text word2vec format: `<vocab> <dim>` header, then one
    /// `<word> <components...>` line per word, sorted for determinism.
    pub fn write_text(&self, path: &Path) -> Result<(), LexiconError> {
        let shown = path.display().to_string();
        let io_err = |source| LexiconError::Io {
            path: shown.clone(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        writeln!(out, "{} {}", self.vectors.len(), self.dimension)
            .map_err(io_err)?;
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        for word in words {
            let comps: Vec<String> = self.vectors[word].iter().map(|v| v.to_string()).collect();
            writeln!(out, "{} {}", word, comps.join(" ")).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

/// Cosine similarity, clamped into [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, LexiconError> {
    if u.len() != v.len() {
        return Err(LexiconError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
            word: None,
        });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(LexiconError::ZeroVector(String::new()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingStore, LexiconError> {
    match format {
        EmbeddingFormat::TextW2v => load_text(path),
        EmbeddingFormat::BinaryW2v => load_binary(path),
    }
}

fn parse_header(line: &str, path: &str) -> Result<(usize, usize), LexiconError> {
    let mut parts = line.split_whitespace();
    let vocab = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| LexiconError::Parse {
            path: path.to_string(),
            line: 1,
            reason: "header must be `<vocab> <dim>`".to_string(),
        })?;
    let dim = parts
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|d| *d > 0)
        .ok_or_else(|| LexiconError::Parse {
            path: path.to_string(),
            line: 1,
            reason: "header must carry a positive dimension".to_string(),
        })?;
    Ok((vocab, dim))
}

fn load_text(path: &Path) -> Result<EmbeddingStore, LexiconError> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| LexiconError::Io {
        path: shown.clone(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| LexiconError::Parse {
        path: shown.clone(),
        line: 1,
        reason: "empty embedding file".to_string(),
    })?;
    let header = header.map_err(|source| LexiconError::Io {
        path: shown.clone(),
        source,
    })?;
    let (vocab, dim) = parse_header(&header, &shown)?;
    let mut store = EmbeddingStore::new(dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|source| LexiconError::Io {
            path: shown.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line has a token");
        let comps: Result<Vec<f64>, _> = parts.map(|p| p.parse::<f64>()).collect();
        let comps = comps.map_err(|e| LexiconError::Parse {
            path: shown.clone(),
            line: line_no,
            reason: format!("bad float in vector for {word:?}: {e}"),
        })?;
        if comps.len() != dim {
            return Err(LexiconError::DimensionMismatch {
                expected: dim,
                got: comps.len(),
                word: Some(word.to_string()),
            });
        }
        store.insert(word, comps)?;
    }
    if store.len() != vocab {
        return Err(LexiconError::Parse {
            path: shown,
            line: 1,
            reason: format!("header claims {vocab} words, body has {}", store.len()),
        });
    }
    Ok(store)
}

fn load_binary(path: &Path) -> Result<EmbeddingStore, LexiconError> {
    let shown = path.display().to_string();
    let io_err = |source| LexiconError::Io {
        path: shown.clone(),
        source,
    };
    let mut reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut header = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        reader.read_exact(&mut byte).map_err(io_err)?;
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
    }
    let header = String::from_utf8_lossy(&header).into_owned();
    let (vocab, dim) = parse_header(&header, &shown)?;
    let mut store = EmbeddingStore::new(dim);
    for _ in 0..vocab {
        let mut word_bytes = Vec::new();
        loop {
            let mut byte = [0u8; 1];
            reader.read_exact(&mut byte).map_err(|_| LexiconError::Parse {
                path: shown.clone(),
                line: 0,
                reason: format!("unexpected end of file after {} words", store.len()),
            })?;
            match byte[0] {
                b' ' => break,
                b'\n' if word_bytes.is_empty() => continue,
                b => word_bytes.push(b),
            }
        }
        let word = String::from_utf8_lossy(&word_bytes).into_owned();
        let mut comps = Vec::with_capacity(dim);
        for _ in 0..dim {
            let v = reader
                .read_f32::<LittleEndian>()
                .map_err(|_| LexiconError::Parse {
                    path: shown.clone(),
                    line: 0,
                    reason: format!("truncated vector for word {word:?}"),
                })?;
            comps.push(v as f64);
        }
        store.insert(&word, comps)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use byteorder::WriteBytesExt;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn two_word_text_file_parses() {
        let f = write_temp("2 3\na 1 0 0\nb 0 1 0\n");
        let store = load_embeddings(f.path(), EmbeddingFormat::TextW2v).unwrap();
        assert_eq!(store.dimension(), 3);
        assert_eq!(store.len(), 2);
        assert_eq!(store.get("a"), Some(&[1.0, 0.0, 0.0][..]));
    }

    #[test]
    fn header_body_mismatch_is_rejected() {
        let f = write_temp("5 3\na 1 0 0\nb 0 1 0\nc 0 0 1\nd 1 1 0\n");
        let err = load_embeddings(f.path(), EmbeddingFormat::TextW2v).unwrap_err();
        assert!(matches!(err, LexiconError::Parse { .. }), "{err}");
    }

    #[test]
    fn mid_file_dimension_mismatch_names_the_word() {
        let f = write_temp("2 3\na 1 0 0\nbad 0 1\n");
        let err = load_embeddings(f.path(), EmbeddingFormat::TextW2v).unwrap_err();
        match err {
            LexiconError::DimensionMismatch { word, .. } => {
                assert_eq!(word.as_deref(), Some("bad"))
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn uppercase_lookup_falls_back_to_lowercase_entry() {
        let f = write_temp("1 2\na 1 2\n");
        let store = load_embeddings(f.path(), EmbeddingFormat::TextW2v).unwrap();
        assert_eq!(store.get("A"), Some(&[1.0, 2.0][..]));
    }

    #[test]
    fn zero_vectors_are_rejected() {
        let f = write_temp("1 2\nzed 0 0\n");
        let err = load_embeddings(f.path(), EmbeddingFormat::TextW2v).unwrap_err();
        assert!(matches!(err, LexiconError::ZeroVector(w) if w == "zed"));
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap().abs() < 1e-15);
        assert!((cosine(&[1.0, 0.0], &[0.8, 0.6]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(LexiconError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(LexiconError::ZeroVector(_))
        ));
    }

    #[test]
    fn text_round_trip_preserves_vectors() {
        let f = write_temp("2 3\nalpha 0.125 -3.5 0.0625\nbeta 1e-7 2.25 -9.75\n");
        let store = load_embeddings(f.path(), EmbeddingFormat::TextW2v).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        store.write_text(out.path()).unwrap();
        let back = load_embeddings(out.path(), EmbeddingFormat::TextW2v).unwrap();
        for word in ["alpha", "beta"] {
            let a = store.get(word).unwrap();
            let b = back.get(word).unwrap();
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn binary_format_parses() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"2 3\n").unwrap();
        f.write_all(b"cat ").unwrap();
        for v in [1.0f32, 2.0, 3.0] {
            f.write_f32::<LittleEndian>(v).unwrap();
        }
        f.write_all(b"\ndog ").unwrap();
        for v in [4.0f32, 5.0, 6.0] {
            f.write_f32::<LittleEndian>(v).unwrap();
        }
        f.flush().unwrap();
        let store = load_embeddings(f.path(), EmbeddingFormat::BinaryW2v).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.get("dog"), Some(&[4.0, 5.0, 6.0][..]));
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"2 3\n").unwrap();
        f.write_all(b"cat ").unwrap();
        f.write_f32::<LittleEndian>(1.0).unwrap();
        f.flush().unwrap();
        let err = load_embeddings(f.path(), EmbeddingFormat::BinaryW2v).unwrap_err();
        assert!(matches!(err, LexiconError::Parse { .. }));
    }
}
