//! Workspace directory holding one artifact file per pipeline stage, with a
//! lock file so two processes never share it.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::manifest::{Manifest, Stages};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Annotate,
    Infer,
    Score,
    Regress,
    Probe,
    Report,
}

impl Stage {
    pub fn command(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Annotate => "annotate",
            Stage::Infer => "infer",
            Stage::Score => "score",
            Stage::Regress => "regress",
            Stage::Probe => "probe",
            Stage::Report => "report",
        }
    }

    fn is_done(&self, stages: &Stages) -> bool {
        match self {
            Stage::Ingest => stages.ingest,
            Stage::Annotate => stages.annotate,
            Stage::Infer => stages.infer,
            Stage::Score => stages.score,
            Stage::Regress => stages.regress,
            Stage::Probe => stages.probe,
            Stage::Report => stages.report,
        }
    }

    pub fn mark_done(&self, stages: &mut Stages) {
        match self {
            Stage::Ingest => stages.ingest = true,
            Stage::Annotate => stages.annotate = true,
            Stage::Infer => stages.infer = true,
            Stage::Score => stages.score = true,
            Stage::Regress => stages.regress = true,
            Stage::Probe => stages.probe = true,
            Stage::Report => stages.report = true,
        }
    }
}

struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// An open, locked workspace.
pub struct Workspace {
    dir: PathBuf,
    _lock: LockGuard,
}

impl Workspace {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Validation(format!("cannot create workspace {}: {e}", dir.display()))
        })?;
        let lock_path = dir.join(".lock");
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock_path)
            .map_err(|_| {
                CliError::Validation(format!(
                    "workspace {} is locked by another audit process (remove {} if stale)",
                    dir.display(),
                    lock_path.display()
                ))
            })?;
        let _ = writeln!(file, "{}", std::process::id());
        Ok(Workspace {
            dir: dir.to_path_buf(),
            _lock: LockGuard { path: lock_path },
        })
    }


    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join("manifest.json")
    }
    pub fn corpus_path(&self) -> PathBuf {
        self.dir.join("corpus.json")
    }
    pub fn annotations_path(&self) -> PathBuf {
        self.dir.join("annotations.jsonl")
    }
    pub fn anonymized_path(&self) -> PathBuf {
        self.dir.join("anonymized.json")
    }
    pub fn inferences_path(&self) -> PathBuf {
        self.dir.join("inferences.jsonl")
    }
    pub fn cache_path(&self) -> PathBuf {
        self.dir.join("cache.jsonl")
    }
    pub fn scores_path(&self) -> PathBuf {
        self.dir.join("scores.csv")
    }
    pub fn medians_path(&self) -> PathBuf {
        self.dir.join("medians.json")
    }
    pub fn regression_path(&self) -> PathBuf {
        self.dir.join("regression.json")
    }
    pub fn probes_path(&self) -> PathBuf {
        self.dir.join("probes.json")
    }
    pub fn report_json_path(&self) -> PathBuf {
        self.dir.join("report.json")
    }
    pub fn report_md_path(&self) -> PathBuf {
        self.dir.join("report.md")
    }
    pub fn figures_dir(&self) -> PathBuf {
        self.dir.join("figures")
    }

    /// Loads the manifest written by an earlier stage.
    pub fn manifest(&self) -> Result<Manifest, CliError> {
        let path = self.manifest_path();
        if !path.exists() {
            return Err(CliError::Validation(
                "workspace has no manifest; run `audit ingest` first".to_string(),
            ));
        }
        Manifest::load(&path)
    }

    /// Fails with an actionable message when a prerequisite stage has not
    /// completed in this workspace.
    pub fn require(&self, manifest: &Manifest, stage: Stage) -> Result<(), CliError> {
        if stage.is_done(&manifest.stages) {
            Ok(())
        } else {
            Err(CliError::Validation(format!(
                "missing {} artifact; run `audit {}` first",
                stage.command(),
                stage.command()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_excludes_second_opener_and_releases_on_drop() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let second = Workspace::open(dir.path());
        assert!(second.is_err());
        drop(ws);
        assert!(Workspace::open(dir.path()).is_ok());
    }

    #[test]
    fn missing_manifest_names_the_first_command() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let err = ws.manifest().unwrap_err();
        assert!(err.to_string().contains("audit ingest"));
    }

    #[test]
    fn require_names_the_missing_stage() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let manifest = Manifest::new("x", 1, 5, false);
        let err = ws.require(&manifest, Stage::Infer).unwrap_err();
        assert!(err.to_string().contains("run `audit infer` first"));
    }
}
