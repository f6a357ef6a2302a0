//! Inference adapter that delegates to an external command speaking the
//! request/response contract as line-oriented JSON:
//!
//! request  `{"sentence": "...", "dimension": "xAttr", "beam_size": 5}`
//! response `{"phrases": ["..."]}`

use super::process_util::LineProcess;
use crate::backends::BackendError;
use crate::inference::{InferenceBackend, InferenceRequest, InferenceResponse};

pub struct ProcessInferenceBackend {
    process: LineProcess,
    version: String,
}

impl ProcessInferenceBackend {
    /// Spawns the adapter command. A version string is required so the
    /// cache is keyed to the exact model revision.
    pub fn spawn(command: &[String], version: Option<String>) -> Result<Self, BackendError> {
        let version = version.filter(|v| !v.is_empty()).ok_or_else(|| {
            BackendError::Config(
                "process inference backend requires a version string".to_string(),
            )
        })?;
        Ok(ProcessInferenceBackend {
            process: LineProcess::spawn(command)?,
            version,
        })
    }
}

impl InferenceBackend for ProcessInferenceBackend {
    fn id(&self) -> &str {
        "process"
    }

    fn version(&self) -> &str {
        &self.version
    }

    fn infer(&self, request: &InferenceRequest) -> Result<InferenceResponse, BackendError> {
        let line = serde_json::to_string(request).expect("request serializes");
        let response_line = self.process.round_trip(&line)?;
        serde_json::from_str(response_line.trim())
            .map_err(|e| BackendError::Protocol(format!("bad inference response: {e}")))
    }
}
