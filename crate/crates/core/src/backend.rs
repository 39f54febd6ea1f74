//! Model backends for the frontend and planner roles.

use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use hearsay_remote::{ChatClient, ChatEndpoint, ChatError, ChatMessage, ChatPart};

use crate::ids::ArtifactId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Frontend,
    Planner,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Frontend => "frontend",
            Role::Planner => "planner",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Perception,
    FollowUp,
    FinalAnswer,
    Plan,
    Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Speaker {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct AudioInput {
    pub artifact_id: ArtifactId,
    pub wav: Arc<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct ModelRequest {
    pub role: Role,
    pub purpose: Purpose,
    pub system: String,
    /// Conversation so far; repair reprompts extend it.
    pub turns: Vec<Turn>,
    /// Audio attached to the first user turn. Always empty for the planner.
    pub audio: Vec<AudioInput>,
    pub temperature: f64,
}

impl ModelRequest {
    pub fn new(role: Role, purpose: Purpose, system: String, user: String, temperature: f64) -> Self {
        ModelRequest {
            role,
            purpose,
            system,
            turns: vec![Turn {
                speaker: Speaker::User,
                text: user,
            }],
            audio: Vec::new(),
            temperature,
        }
    }

    pub fn with_audio(mut self, audio: Vec<AudioInput>) -> Self {
        self.audio = audio;
        self
    }

    pub fn push_exchange(&mut self, reply: &str, follow: String) {
        self.turns.push(Turn {
            speaker: Speaker::Assistant,
            text: reply.to_string(),
        });
        self.turns.push(Turn {
            speaker: Speaker::User,
            text: follow,
        });
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("content-safety rejection: {0}")]
    ContentSafety(String),
    #[error("script exhausted: {role} script has only {consumed} entries")]
    ScriptExhausted { role: &'static str, consumed: usize },
    #[error("backend error: {0}")]
    Other(String),
}

pub trait ModelBackend: Send + Sync {
    fn complete(&self, request: &ModelRequest) -> Result<String, BackendError>;

    /// Short description recorded in trace config snapshots. Must not contain
    /// secrets.
    fn label(&self) -> String;
}

#[derive(Clone)]
pub struct Backends {
    pub frontend: Arc<dyn ModelBackend>,
    pub planner: Arc<dyn ModelBackend>,
}

impl Backends {
    pub fn shared(backend: Arc<dyn ModelBackend>) -> Self {
        Backends {
            frontend: Arc::clone(&backend),
            planner: backend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedFailure {
    Unreachable,
    ContentSafety,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedError {
    pub error: ScriptedFailure,
    #[serde(default)]
    pub message: String,
}

/// One scripted reply: literal text, a simulated failure, or a JSON object
/// sent as its compact serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Text(String),
    Error(ScriptedError),
    Json(Value),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default)]
    pub frontend: Vec<ScriptEntry>,
    #[serde(default)]
    pub planner: Vec<ScriptEntry>,
}

impl Script {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Other(format!("reading script {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| BackendError::Other(format!("parsing script {}: {e}", path.display())))
    }

    pub fn frontend(mut self, entry: impl Into<ScriptEntry>) -> Self {
        self.frontend.push(entry.into());
        self
    }

    pub fn planner(mut self, entry: impl Into<ScriptEntry>) -> Self {
        self.planner.push(entry.into());
        self
    }
}

impl From<&str> for ScriptEntry {
    fn from(s: &str) -> Self {
        ScriptEntry::Text(s.to_string())
    }
}

impl From<String> for ScriptEntry {
    fn from(s: String) -> Self {
        ScriptEntry::Text(s)
    }
}

impl From<Value> for ScriptEntry {
    fn from(v: Value) -> Self {
        ScriptEntry::Json(v)
    }
}

impl From<ScriptedFailure> for ScriptEntry {
    fn from(f: ScriptedFailure) -> Self {
        ScriptEntry::Error(ScriptedError {
            error: f,
            message: String::new(),
        })
    }
}

/// What a scripted backend saw, for assertions in tests.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub role: Role,
    pub purpose: Purpose,
    pub audio_ids: Vec<ArtifactId>,
    pub turns: Vec<String>,
}

/// Replays script entries strictly in order per role.
pub struct ScriptedBackend {
    script: Script,
    cursor: Mutex<(usize, usize)>,
    log: Mutex<Vec<RecordedRequest>>,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        ScriptedBackend {
            script,
            cursor: Mutex::new((0, 0)),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Entries not yet consumed, per role.
    pub fn remaining(&self) -> (usize, usize) {
        let c = self.cursor.lock().unwrap_or_else(|e| e.into_inner());
        (self.script.frontend.len() - c.0, self.script.planner.len() - c.1)
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(&self, request: &ModelRequest) -> Result<String, BackendError> {
        self.log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(RecordedRequest {
                role: request.role,
                purpose: request.purpose,
                audio_ids: request.audio.iter().map(|a| a.artifact_id).collect(),
                turns: request.turns.iter().map(|t| t.text.clone()).collect(),
            });
        let entry = {
            let mut c = self.cursor.lock().unwrap_or_else(|e| e.into_inner());
            let (list, pos) = match request.role {
                Role::Frontend => (&self.script.frontend, &mut c.0),
                Role::Planner => (&self.script.planner, &mut c.1),
            };
            let entry = list.get(*pos).cloned().ok_or(BackendError::ScriptExhausted {
                role: request.role.as_str(),
                consumed: list.len(),
            })?;
            *pos += 1;
            entry
        };
        match entry {
            ScriptEntry::Text(t) => Ok(t),
            ScriptEntry::Json(v) => Ok(v.to_string()),
            ScriptEntry::Error(e) => Err(match e.error {
                ScriptedFailure::Unreachable => BackendError::Unreachable(e.message),
                ScriptedFailure::ContentSafety => BackendError::ContentSafety(e.message),
            }),
        }
    }

    fn label(&self) -> String {
        "scripted".into()
    }
}

/// Live backend over a chat-completions endpoint.
pub struct ChatBackend {
    client: ChatClient,
}

impl ChatBackend {
    pub fn new(endpoint: ChatEndpoint) -> Self {
        ChatBackend {
            client: ChatClient::new(endpoint),
        }
    }
}

impl ModelBackend for ChatBackend {
    fn complete(&self, request: &ModelRequest) -> Result<String, BackendError> {
        let mut messages = vec![ChatMessage::system(request.system.clone())];
        for (i, turn) in request.turns.iter().enumerate() {
            match turn.speaker {
                Speaker::Assistant => messages.push(ChatMessage::assistant(turn.text.clone())),
                Speaker::User => {
                    let mut parts = vec![ChatPart::Text(turn.text.clone())];
                    if i == 0 {
                        for a in &request.audio {
                            parts.push(ChatPart::Text(format!("[{}]", a.artifact_id)));
                            parts.push(ChatPart::Audio(a.wav.as_ref().clone()));
                        }
                    }
                    messages.push(ChatMessage::user(parts));
                }
            }
        }
        self.client
            .complete(&messages, request.temperature)
            .map_err(|e| match e {
                ChatError::Unreachable(m) => BackendError::Unreachable(m),
                ChatError::ContentSafety(m) => BackendError::ContentSafety(m),
                ChatError::Backend(m) => BackendError::Other(m),
            })
    }

    fn label(&self) -> String {
        format!("chat:{}", self.client.endpoint().model)
    }
}
