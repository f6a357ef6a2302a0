//! Interchangeable pipeline strategies behind common traits, registered by
//! name and selected at runtime via config or CLI flags.
//!
//! Three strategy kinds exist: coreference ([`crate::protagonist::CorefBackend`]),
//! commonsense inference ([`crate::inference::InferenceBackend`]), and the
//! story-level gender classifier ([`crate::metrics::ClassifierBackend`]).
//! Built-ins:
//!
//! | kind       | name       | notes                                        |
//! |------------|------------|----------------------------------------------|
//! | coref      | `rule`     | deterministic in-repo fallback               |
//! | coref      | `process`  | external command speaking the JSON contract  |
//! | inference  | `stub`     | fixture table plus deterministic synthesis   |
//! | inference  | `process`  | external command speaking the JSON contract  |
//! | classifier | `baseline` | token counts + L2 logistic regression        |

mod classifier_baseline;
mod coref_process;
mod coref_rule;
mod inference_process;
mod inference_stub;
mod process_util;

pub use classifier_baseline::BaselineClassifier;
pub use coref_process::{CorefRequest, CorefResponse, ProcessCorefBackend};
pub use coref_rule::RuleBasedCoref;
pub use inference_process::ProcessInferenceBackend;
pub use inference_stub::StubBackend;

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::inference::InferenceBackend;
use crate::metrics::ClassifierBackend;
use crate::protagonist::CorefBackend;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("process error: {0}")]
    Process(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown {kind} backend {name:?}; available: {available}")]
    Unknown {
        kind: &'static str,
        name: String,
        available: String,
    },
}

impl BackendError {
    /// Transient failures worth retrying (the cache makes reruns cheap);
    /// configuration mistakes are not.
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            BackendError::Process(_) | BackendError::Io(_) | BackendError::Protocol(_)
        )
    }
}

/// Options handed to backend factories; parsed from config or CLI flags.
#[derive(Debug, Clone, Default)]
pub struct BackendOptions {
    /// Fixture table for the stub inference backend.
    pub fixture: Option<PathBuf>,
    /// Command line (argv) for process adapters.
    pub command: Vec<String>,
    /// Version string a process adapter must declare.
    pub version: Option<String>,
}

type CorefFactory =
    Box<dyn Fn(&BackendOptions) -> Result<Box<dyn CorefBackend>, BackendError> + Send + Sync>;
type InferenceFactory =
    Box<dyn Fn(&BackendOptions) -> Result<Box<dyn InferenceBackend>, BackendError> + Send + Sync>;
type ClassifierFactory =
    Box<dyn Fn(&BackendOptions) -> Result<Box<dyn ClassifierBackend>, BackendError> + Send + Sync>;

/// Name-indexed factories for every strategy kind.
pub struct BackendRegistry {
    coref: BTreeMap<String, CorefFactory>,
    inference: BTreeMap<String, InferenceFactory>,
    classifier: BTreeMap<String, ClassifierFactory>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry {
            coref: BTreeMap::new(),
            inference: BTreeMap::new(),
            classifier: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register_coref("rule", |_| Ok(Box::new(RuleBasedCoref::default())));
        registry.register_coref("process", |opts| {
            Ok(Box::new(ProcessCorefBackend::spawn(
                &opts.command,
                opts.version.clone(),
            )?))
        });
        registry.register_inference("stub", |opts| {
            let backend = match &opts.fixture {
                Some(path) => StubBackend::from_file(path)?,
                None => StubBackend::new(),
            };
            Ok(Box::new(backend))
        });
        registry.register_inference("process", |opts| {
            Ok(Box::new(ProcessInferenceBackend::spawn(
                &opts.command,
                opts.version.clone(),
            )?))
        });
        registry.register_classifier("baseline", |_| Ok(Box::new(BaselineClassifier::default())));
        registry
    }

    pub fn register_coref<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&BackendOptions) -> Result<Box<dyn CorefBackend>, BackendError>
            + Send
            + Sync
            + 'static,
    {
        self.coref.insert(name.to_string(), Box::new(factory));
    }

    pub fn register_inference<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&BackendOptions) -> Result<Box<dyn InferenceBackend>, BackendError>
            + Send
            + Sync
            + 'static,
    {
        self.inference.insert(name.to_string(), Box::new(factory));
    }

    pub fn register_classifier<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&BackendOptions) -> Result<Box<dyn ClassifierBackend>, BackendError>
            + Send
            + Sync
            + 'static,
    {
        self.classifier.insert(name.to_string(), Box::new(factory));
    }

    pub fn build_coref(
        &self,
        name: &str,
        options: &BackendOptions,
    ) -> Result<Box<dyn CorefBackend>, BackendError> {
        match self.coref.get(name) {
            Some(factory) => factory(options),
            None => Err(BackendError::Unknown {
                kind: "coref",
                name: name.to_string(),
                available: join_names(self.coref.keys()),
            }),
        }
    }

    pub fn build_inference(
        &self,
        name: &str,
        options: &BackendOptions,
    ) -> Result<Box<dyn InferenceBackend>, BackendError> {
        match self.inference.get(name) {
            Some(factory) => factory(options),
            None => Err(BackendError::Unknown {
                kind: "inference",
                name: name.to_string(),
                available: join_names(self.inference.keys()),
            }),
        }
    }

    pub fn build_classifier(
        &self,
        name: &str,
        options: &BackendOptions,
    ) -> Result<Box<dyn ClassifierBackend>, BackendError> {
        match self.classifier.get(name) {
            Some(factory) => factory(options),
            None => Err(BackendError::Unknown {
                kind: "classifier",
                name: name.to_string(),
                available: join_names(self.classifier.keys()),
            }),
        }
    }

    pub fn coref_names(&self) -> Vec<&str> {
        self.coref.keys().map(|k| k.as_str()).collect()
    }

    pub fn inference_names(&self) -> Vec<&str> {
        self.inference.keys().map(|k| k.as_str()).collect()
    }

    pub fn classifier_names(&self) -> Vec<&str> {
        self.classifier.keys().map(|k| k.as_str()).collect()
    }
}

fn join_names<'a, I: Iterator<Item = &'a String>>(names: I) -> String {
    let list: Vec<&str> = names.map(|n| n.as_str()).collect();
    list.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_registered() {
        let registry = BackendRegistry::with_builtins();
        assert_eq!(registry.coref_names(), vec!["process", "rule"]);
        assert_eq!(registry.inference_names(), vec!["process", "stub"]);
        assert_eq!(registry.classifier_names(), vec!["baseline"]);
        let coref = registry.build_coref("rule", &BackendOptions::default()).unwrap();
        assert_eq!(coref.id(), "rule");
        let inference = registry
            .build_inference("stub", &BackendOptions::default())
            .unwrap();
        assert_eq!(inference.id(), "stub");
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let registry = BackendRegistry::with_builtins();
        match registry.build_inference("nope", &BackendOptions::default()) {
            Err(BackendError::Unknown { available, .. }) => {
                assert_eq!(available, "process, stub");
            }
            Err(other) => panic!("unexpected error: {other}"),
            Ok(_) => panic!("unknown backend must fail"),
        }
        match registry.build_coref("nope", &BackendOptions::default()) {
            Err(err) => assert!(!err.is_retriable()),
            Ok(_) => panic!("unknown backend must fail"),
        }
    }

    #[test]
    fn custom_backends_can_be_registered() {
        let mut registry = BackendRegistry::empty();
        registry.register_coref("rule2", |_| Ok(Box::new(RuleBasedCoref::default())));
        assert!(registry
            .build_coref("rule2", &BackendOptions::default())
            .is_ok());
    }
}
