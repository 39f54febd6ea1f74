//! Client for chat-completions style endpoints that accept interleaved text,
//! audio and image parts.

use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::client::map_transport;
use crate::error::RemoteError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChatError {
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    /// The provider refused the request or the reply on content-policy grounds.
    #[error("content-safety rejection: {0}")]
    ContentSafety(String),
    #[error("backend error: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatEndpoint {
    pub url: String,
    pub model: String,
    /// Environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_chat_timeout")]
    pub timeout_s: f64,
}

fn default_chat_timeout() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChatPart {
    Text(String),
    /// WAV bytes.
    Audio(Vec<u8>),
    /// PNG bytes.
    Image(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatMessage {
    pub role: &'static str,
    pub parts: Vec<ChatPart>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        ChatMessage {
            role: "system",
            parts: vec![ChatPart::Text(text.into())],
        }
    }

    pub fn user(parts: Vec<ChatPart>) -> Self {
        ChatMessage { role: "user", parts }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant",
            parts: vec![ChatPart::Text(text.into())],
        }
    }
}

fn encode_message(m: &ChatMessage) -> Value {
    let b64 = &base64::engine::general_purpose::STANDARD;
    let only_text = m.parts.iter().all(|p| matches!(p, ChatPart::Text(_)));
    if only_text {
        let text: Vec<&str> = m
            .parts
            .iter()
            .filter_map(|p| match p {
                ChatPart::Text(t) => Some(t.as_str()),
                _ => None,
            })
            .collect();
        return json!({"role": m.role, "content": text.join("\n")});
    }
    let content: Vec<Value> = m
        .parts
        .iter()
        .map(|p| match p {
            ChatPart::Text(t) => json!({"type": "text", "text": t}),
            ChatPart::Audio(bytes) => json!({
                "type": "input_audio",
                "input_audio": {"data": b64.encode(bytes), "format": "wav"}
            }),
            ChatPart::Image(bytes) => json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{}", b64.encode(bytes))}
            }),
        })
        .collect();
    json!({"role": m.role, "content": content})
}

const SAFETY_MARKERS: [&str; 3] = ["content_filter", "data_inspection_failed", "content_policy"];

fn mentions_safety(text: &str) -> bool {
    SAFETY_MARKERS.iter().any(|m| text.contains(m))
}

pub struct ChatClient {
    agent: ureq::Agent,
    endpoint: ChatEndpoint,
}

impl ChatClient {
    pub fn new(endpoint: ChatEndpoint) -> Self {
        ChatClient {
            agent: ureq::AgentBuilder::new().build(),
            endpoint,
        }
    }

    pub fn endpoint(&self) -> &ChatEndpoint {
        &self.endpoint
    }

    pub fn complete(&self, messages: &[ChatMessage], temperature: f64) -> Result<String, ChatError> {
        let body = json!({
            "model": self.endpoint.model,
            "temperature": temperature,
            "messages": messages.iter().map(encode_message).collect::<Vec<_>>(),
        });
        let mut req = self
            .agent
            .post(&self.endpoint.url)
            .timeout(Duration::from_secs_f64(self.endpoint.timeout_s.max(0.001)))
            .set("Content-Type", "application/json");
        if let Some(var) = &self.endpoint.api_key_env {
            let key = std::env::var(var)
                .map_err(|_| ChatError::Backend(format!("api key variable {var} is not set")))?;
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let text = match req.send_string(&body.to_string()) {
            Ok(resp) => resp
                .into_string()
                .map_err(|e| ChatError::Unreachable(e.to_string()))?,
            Err(err) => {
                return Err(match map_transport(err) {
                    RemoteError::Status { code, body } if mentions_safety(&body) => {
                        ChatError::ContentSafety(format!("status {code}: {body}"))
                    }
                    RemoteError::Status { code, body } => {
                        ChatError::Backend(format!("status {code}: {body}"))
                    }
                    other => ChatError::Unreachable(other.to_string()),
                })
            }
        };
        parse_completion(&text)
    }
}

/// Extracts the assistant text from a completion body.
pub fn parse_completion(text: &str) -> Result<String, ChatError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| ChatError::Backend(format!("completion body: {e}")))?;
    if let Some(err) = v.get("error") {
        let s = err.to_string();
        return Err(if mentions_safety(&s) {
            ChatError::ContentSafety(s)
        } else {
            ChatError::Backend(s)
        });
    }
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| ChatError::Backend("completion has no choices".into()))?;
    if choice.get("finish_reason").and_then(Value::as_str) == Some("content_filter") {
        return Err(ChatError::ContentSafety("finish_reason content_filter".into()));
    }
    choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ChatError::Backend("completion has no message content".into()))
}
