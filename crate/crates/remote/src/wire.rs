//! Request/response bodies shared by every remote tool.
//!
//! ```text
//! POST <endpoint>
//! { "request_id": "...", "tool": "transcribe_qwenasr", "media": {...},
//!   "attachments": [...], "params": {...} }
//! -> 200 { "request_id": "...", "result": { <tool-specific payload> } }
//! ```

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediaRef {
    Inline { mime: String, data_base64: String },
    SharedPath { path: String },
}

impl MediaRef {
    pub fn inline(mime: &str, bytes: &[u8]) -> Self {
        MediaRef::Inline {
            mime: mime.to_string(),
            data_base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }

    pub fn decode_inline(&self) -> Option<Vec<u8>> {
        match self {
            MediaRef::Inline { data_base64, .. } => base64::engine::general_purpose::STANDARD
                .decode(data_base64)
                .ok(),
            MediaRef::SharedPath { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attachment {
    pub name: String,
    pub media: MediaRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolRequest {
    pub request_id: String,
    pub tool: String,
    pub media: MediaRef,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResponse {
    pub request_id: String,
    pub result: Value,
}
