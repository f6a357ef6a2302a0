//! The run manifest: input digests, backend identities, seed, timestamps,
//! and stage completion flags. Every report embeds the deterministic subset
//! (everything except timestamps, which would break byte-identical reruns).

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendIdentity {
    pub id: String,
    pub version: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    pub ingest: bool,
    pub annotate: bool,
    pub infer: bool,
    pub score: bool,
    pub regress: bool,
    pub probe: bool,
    pub report: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub beam_size: usize,
    pub token_pooling: bool,
    pub corpus_digest: Option<String>,
    pub lexicon_digests: BTreeMap<String, String>,
    pub backends: BTreeMap<String, BackendIdentity>,
    pub stages: Stages,
    pub created_at_epoch: u64,
    pub updated_at_epoch: u64,
}

/// What the report embeds: the manifest minus its volatile timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub schema_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub beam_size: usize,
    pub token_pooling: bool,
    pub corpus_digest: Option<String>,
    pub lexicon_digests: BTreeMap<String, String>,
    pub backends: BTreeMap<String, BackendIdentity>,
    pub stages: Stages,
}

impl From<&Manifest> for ManifestSummary {
    fn from(m: &Manifest) -> Self {
        ManifestSummary {
            schema_version: m.schema_version.clone(),
            config_digest: m.config_digest.clone(),
            seed: m.seed,
            beam_size: m.beam_size,
            token_pooling: m.token_pooling,
            corpus_digest: m.corpus_digest.clone(),
            lexicon_digests: m.lexicon_digests.clone(),
            backends: m.backends.clone(),
            stages: m.stages,
        }
    }
}

fn epoch_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Manifest {
    pub fn new(config_digest: &str, seed: u64, beam_size: usize, token_pooling: bool) -> Self {
        let now = epoch_now();
        Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION.to_string(),
            config_digest: config_digest.to_string(),
            seed,
            beam_size,
            token_pooling,
            corpus_digest: None,
            lexicon_digests: BTreeMap::new(),
            backends: BTreeMap::new(),
            stages: Stages::default(),
            created_at_epoch: now,
            updated_at_epoch: now,
        }
    }

    pub fn touch(&mut self) {
        self.updated_at_epoch = epoch_now();
    }

    pub fn record_backend(&mut self, kind: &str, id: &str, version: &str) {
        self.backends.insert(
            kind.to_string(),
            BackendIdentity {
                id: id.to_string(),
                version: version.to_string(),
            },
        );
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("manifest is corrupt: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n").map_err(|e| {
            CliError::Validation(format!("cannot write manifest {}: {e}", path.display()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_drops_timestamps_only() {
        let mut manifest = Manifest::new("abc", 7, 5, false);
        manifest.record_backend("inference", "stub", "1");
        manifest.stages.ingest = true;
        let summary = ManifestSummary::from(&manifest);
        let json = serde_json::to_string(&summary).unwrap();
        assert!(!json.contains("epoch"));
        assert!(json.contains("\"config_digest\":\"abc\""));
        assert!(json.contains("\"stub\""));
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let mut manifest = Manifest::new("abc", 7, 5, true);
        manifest.corpus_digest = Some("d".to_string());
        manifest.save(&path).unwrap();
        let back = Manifest::load(&path).unwrap();
        assert_eq!(manifest, back);
    }
}
