//! Coreference adapter that delegates to an external command speaking a
//! line-oriented JSON contract:
//!
//! request  `{"story_id": "...", "text": "...", "sentence_offsets": [[s, e], ...]}`
//! response `{"clusters": [[[sentence_index, char_start, char_end], ...], ...]}`
//!
//! `text` is the story's sentences joined by single spaces;
//! `sentence_offsets` are each sentence's character range in that joined
//! text. Response spans are character offsets within their own sentence.

use serde::{Deserialize, Serialize};

use super::process_util::LineProcess;
use crate::backends::BackendError;
use crate::corpus::Story;
use crate::protagonist::{CorefBackend, MentionSpan};

#[derive(Debug, Serialize, Deserialize)]
pub struct CorefRequest {
    pub story_id: String,
    pub text: String,
    pub sentence_offsets: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CorefResponse {
    pub clusters: Vec<Vec<(usize, usize, usize)>>,
}

pub struct ProcessCorefBackend {
    process: LineProcess,
    version: String,
}

impl ProcessCorefBackend {
    /// Spawns the adapter command. A version string is required so cached
    /// artifacts never mix model revisions.
    pub fn spawn(command: &[String], version: Option<String>) -> Result<Self, BackendError> {
        let version = version.filter(|v| !v.is_empty()).ok_or_else(|| {
            BackendError::Config(
                "process coref backend requires a version string".to_string(),
            )
        })?;
        Ok(ProcessCorefBackend {
            process: LineProcess::spawn(command)?,
            version,
        })
    }

    pub fn request_for(story: &Story) -> CorefRequest {
        let mut offsets = Vec::with_capacity(story.sentences.len());
        let mut cursor = 0usize;
        for (i, sentence) in story.sentences.iter().enumerate() {
            if i > 0 {
                cursor += 1; // joining space
            }
            let len = sentence.text.chars().count();
            offsets.push((cursor, cursor + len));
            cursor += len;
        }
        CorefRequest {
            story_id: story.story_id.as_str().to_string(),
            text: story.joined_text(),
            sentence_offsets: offsets,
        }
    }
}

impl CorefBackend for ProcessCorefBackend {
    fn id(&self) -> &str {
        "process"
    }

    fn version(&self) -> &str {
        &self.version
    }

    fn resolve(&self, story: &Story) -> Result<Vec<Vec<MentionSpan>>, BackendError> {
        let request = Self::request_for(story);
        let line = serde_json::to_string(&request).expect("request serializes");
        let response_line = self.process.round_trip(&line)?;
        let response: CorefResponse = serde_json::from_str(response_line.trim())
            .map_err(|e| BackendError::Protocol(format!("bad coref response: {e}")))?;
        Ok(response
            .clusters
            .into_iter()
            .map(|cluster| {
                cluster
                    .into_iter()
                    .map(|(sentence_index, char_start, char_end)| MentionSpan {
                        sentence_index,
                        char_start,
                        char_end,
                    })
                    .collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SentenceSplitter, Source};

    #[test]
    fn request_offsets_cover_joined_text() {
        let story = Story::from_text(
            "s",
            "T",
            "Anna ran. She won.",
            Source::Human,
            &SentenceSplitter::default(),
        )
        .unwrap();
        let request = ProcessCorefBackend::request_for(&story);
        assert_eq!(request.text, "Anna ran. She won.");
        assert_eq!(request.sentence_offsets, vec![(0, 9), (10, 18)]);
        let chars: Vec<char> = request.text.chars().collect();
        for (i, (start, end)) in request.sentence_offsets.iter().enumerate() {
            let slice: String = chars[*start..*end].iter().collect();
            assert_eq!(slice, story.sentences[i].text);
        }
    }

    #[test]
    fn missing_version_is_a_config_error() {
        match ProcessCorefBackend::spawn(&["true".to_string()], None) {
            Err(BackendError::Config(_)) => {}
            Err(other) => panic!("unexpected error: {other}"),
            Ok(_) => panic!("spawn without a version must fail"),
        }
    }
}
