//! TOML run configuration. Every key can be overridden from the command
//! line: the named shortcuts (`--corpus`, `--backend`, `--seed`) or the
//! generic `--set section.key=value`. Relative paths resolve against the
//! config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use storyaudit::corpus::CorpusFormat;
use storyaudit::lexicons::EmbeddingFormat;
use storyaudit::sha256_hex;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub backends: BackendsConfig,
    pub lexicons: LexiconsConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub probes: ProbesConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub path: PathBuf,
    /// "jsonl" or "csv"; inferred from the extension when omitted.
    #[serde(default)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsConfig {
    #[serde(default = "default_coref")]
    pub coref: String,
    #[serde(default = "default_inference")]
    pub inference: String,
    #[serde(default = "default_classifier")]
    pub classifier: String,
    #[serde(default)]
    pub coref_options: BackendOptionsConfig,
    #[serde(default)]
    pub inference_options: BackendOptionsConfig,
    #[serde(default)]
    pub classifier_options: BackendOptionsConfig,
}

impl Default for BackendsConfig {
    fn default() -> Self {
        BackendsConfig {
            coref: default_coref(),
            inference: default_inference(),
            classifier: default_classifier(),
            coref_options: BackendOptionsConfig::default(),
            inference_options: BackendOptionsConfig::default(),
            classifier_options: BackendOptionsConfig::default(),
        }
    }
}

fn default_coref() -> String {
    "rule".to_string()
}
fn default_inference() -> String {
    "stub".to_string()
}
fn default_classifier() -> String {
    "baseline".to_string()
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BackendOptionsConfig {
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    #[serde(default)]
    pub command: Vec<String>,
    #[serde(default)]
    pub version: Option<String>,
}

impl BackendOptionsConfig {
    pub fn to_options(&self) -> storyaudit::backends::BackendOptions {
        storyaudit::backends::BackendOptions {
            fixture: self.fixture.clone(),
            command: self.command.clone(),
            version: self.version.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconsConfig {
    pub embeddings: PathBuf,
    /// "text" or "binary".
    #[serde(default)]
    pub embeddings_format: Option<String>,
    pub intellect: PathBuf,
    pub appearance: PathBuf,
    pub strength: PathBuf,
    pub weakness: PathBuf,
    pub affect: PathBuf,
    pub categories: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_beam")]
    pub beam_size: usize,
    /// Pool token-level scores instead of per-story means (sensitivity
    /// analysis).
    #[serde(default)]
    pub token_pooling: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            seed: default_seed(),
            beam_size: default_beam(),
            token_pooling: false,
        }
    }
}

fn default_seed() -> u64 {
    7
}
fn default_beam() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    #[serde(default = "default_true")]
    pub bow: bool,
    #[serde(default = "default_true")]
    pub inference_classifier: bool,
}

impl Default for ProbesConfig {
    fn default() -> Self {
        ProbesConfig {
            bow: true,
            inference_classifier: true,
        }
    }
}

fn default_true() -> bool {
    true
}

impl Config {
    pub fn corpus_format(&self) -> Result<CorpusFormat, CliError> {
        match self.corpus.format.as_deref() {
            Some("jsonl") => Ok(CorpusFormat::Jsonl),
            Some("csv") => Ok(CorpusFormat::Csv),
            Some(other) => Err(CliError::Validation(format!(
                "unknown corpus format {other:?} (expected \"jsonl\" or \"csv\")"
            ))),
            None => match self.corpus.path.extension().and_then(|e| e.to_str()) {
                Some("jsonl") | Some("json") => Ok(CorpusFormat::Jsonl),
                Some("csv") => Ok(CorpusFormat::Csv),
                _ => Err(CliError::Validation(format!(
                    "cannot infer corpus format from {:?}; set corpus.format",
                    self.corpus.path
                ))),
            },
        }
    }

    pub fn embedding_format(&self) -> Result<EmbeddingFormat, CliError> {
        match self.lexicons.embeddings_format.as_deref() {
            None | Some("text") => Ok(EmbeddingFormat::TextW2v),
            Some("binary") => Ok(EmbeddingFormat::BinaryW2v),
            Some(other) => Err(CliError::Validation(format!(
                "unknown embeddings format {other:?} (expected \"text\" or \"binary\")"
            ))),
        }
    }
}

/// A loaded configuration plus the digest of its source bytes and overrides.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub digest: String,
}

/// Named CLI overrides plus generic `--set` pairs.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub backend: Option<String>,
    pub seed: Option<u64>,
    pub set: Vec<String>,
}

impl Overrides {
    fn as_set_pairs(&self) -> Result<Vec<(String, toml::Value)>, CliError> {
        let mut pairs = Vec::new();
        if let Some(corpus) = &self.corpus {
            pairs.push((
                "corpus.path".to_string(),
                toml::Value::String(corpus.display().to_string()),
            ));
        }
        if let Some(backend) = &self.backend {
            pairs.push((
                "backends.inference".to_string(),
                toml::Value::String(backend.clone()),
            ));
        }
        if let Some(seed) = self.seed {
            pairs.push(("analysis.seed".to_string(), toml::Value::Integer(seed as i64)));
        }
        for raw in &self.set {
            let (key, value) = raw.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("--set expects key=value, got {raw:?}"))
            })?;
            let value = parse_toml_scalar(value);
            pairs.push((key.to_string(), value));
        }
        Ok(pairs)
    }
}

fn parse_toml_scalar(raw: &str) -> toml::Value {
    if let Ok(v) = raw.parse::<i64>() {
        return toml::Value::Integer(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return toml::Value::Float(v);
    }
    if let Ok(v) = raw.parse::<bool>() {
        return toml::Value::Boolean(v);
    }
    toml::Value::String(raw.to_string())
}

fn apply_override(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            CliError::Validation(format!("--set {key}: {part:?} is not a table"))
        })?;
        if i == parts.len() - 1 {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

/// Loads, overrides, resolves paths, and digests a config file. The digest
/// covers the raw file bytes plus the override pairs, so identical inputs
/// give identical digests regardless of where the tree is checked out.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| CliError::Validation(format!("config is not UTF-8: {e}")))?;
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| CliError::Validation(format!("config parse error: {e}")))?;
    let pairs = overrides.as_set_pairs()?;
    let mut digest_input = bytes;
    for (key, val) in &pairs {
        digest_input.extend_from_slice(b"\0");
        digest_input.extend_from_slice(format!("{key}={val}").as_bytes());
    }
    for (key, val) in pairs {
        apply_override(&mut value, &key, val)?;
    }
    let mut config: Config = value
        .try_into()
        .map_err(|e| CliError::Validation(format!("config error: {e}")))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve_paths(&mut config, base);
    Ok(LoadedConfig {
        config,
        digest: sha256_hex(&digest_input),
    })
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&p);
    }
}

fn resolve_paths(config: &mut Config, base: &Path) {
    resolve(base, &mut config.corpus.path);
    resolve(base, &mut config.lexicons.embeddings);
    resolve(base, &mut config.lexicons.intellect);
    resolve(base, &mut config.lexicons.appearance);
    resolve(base, &mut config.lexicons.strength);
    resolve(base, &mut config.lexicons.weakness);
    resolve(base, &mut config.lexicons.affect);
    resolve(base, &mut config.lexicons.categories);
    for options in [
        &mut config.backends.coref_options,
        &mut config.backends.inference_options,
        &mut config.backends.classifier_options,
    ] {
        if let Some(fixture) = options.fixture.as_mut() {
            resolve(base, fixture);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const MINIMAL: &str = r#"
[corpus]
path = "corpus.jsonl"

[lexicons]
embeddings = "emb.txt"
intellect = "i.txt"
appearance = "a.txt"
strength = "s.txt"
weakness = "w.txt"
affect = "affect.tsv"
categories = "cats.dic"
"#;

    fn write_config(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new()
            .suffix(".toml")
            .tempfile()
            .unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn minimal_config_applies_defaults_and_resolves_paths() {
        let f = write_config(MINIMAL);
        let loaded = load_config(f.path(), &Overrides::default()).unwrap();
        let config = loaded.config;
        assert_eq!(config.backends.inference, "stub");
        assert_eq!(config.analysis.seed, 7);
        assert_eq!(config.analysis.beam_size, 5);
        assert!(config.probes.bow);
        assert!(config.corpus.path.is_absolute() || f.path().parent().is_none());
        assert_eq!(config.corpus_format().unwrap(), CorpusFormat::Jsonl);
    }

    #[test]
    fn overrides_change_values_and_digest() {
        let f = write_config(MINIMAL);
        let plain = load_config(f.path(), &Overrides::default()).unwrap();
        let overridden = load_config(
            f.path(),
            &Overrides {
                seed: Some(99),
                backend: Some("process".to_string()),
                set: vec!["analysis.token_pooling=true".to_string()],
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(overridden.config.analysis.seed, 99);
        assert_eq!(overridden.config.backends.inference, "process");
        assert!(overridden.config.analysis.token_pooling);
        assert_ne!(plain.digest, overridden.digest);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = write_config(&format!("{MINIMAL}\n[typo]\nx = 1\n"));
        assert!(load_config(f.path(), &Overrides::default()).is_err());
    }

    #[test]
    fn digest_is_stable_for_identical_inputs() {
        let f = write_config(MINIMAL);
        let a = load_config(f.path(), &Overrides::default()).unwrap();
        let b = load_config(f.path(), &Overrides::default()).unwrap();
        assert_eq!(a.digest, b.digest);
    }
}
