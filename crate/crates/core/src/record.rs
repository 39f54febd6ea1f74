use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ids::ArtifactId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceSource {
    FrontendCaption,
    FrontendFollowup,
    Tool,
    Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceItem {
    pub seq: u64,
    pub source: EvidenceSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_name: Option<String>,
    pub subject_artifact_ids: Vec<ArtifactId>,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_note: Option<String>,
}

/// An evidence item before the state assigns its sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct NewEvidence {
    pub source: EvidenceSource,
    pub tool_name: Option<String>,
    pub subject_artifact_ids: Vec<ArtifactId>,
    pub payload: Value,
    pub boundary_note: Option<String>,
}

impl NewEvidence {
    pub fn new(source: EvidenceSource, subjects: Vec<ArtifactId>, payload: Value) -> Self {
        NewEvidence {
            source,
            tool_name: None,
            subject_artifact_ids: subjects,
            payload,
            boundary_note: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolCallStatus {
    Ok,
    RejectedUnknownTool,
    InvalidParams,
    ExecutionError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolCallRecord {
    pub round: u32,
    pub tool_name: String,
    pub params: Map<String, Value>,
    pub status: ToolCallStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub produced_evidence_seq: Option<u64>,
    /// Harmonic/percussive separation and clip-producing segmentation yield
    /// several artifacts from one call.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub produced_artifact_ids: Vec<ArtifactId>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub diagnostics: String,
}

impl ToolCallRecord {
    pub fn failed(round: u32, tool_name: &str, params: &Map<String, Value>, status: ToolCallStatus, why: String) -> Self {
        ToolCallRecord {
            round,
            tool_name: tool_name.to_string(),
            params: params.clone(),
            status,
            produced_evidence_seq: None,
            produced_artifact_ids: Vec::new(),
            diagnostics: why,
        }
    }
}
