use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::RemoteError;
use crate::schema::OutputSchema;
use crate::wire::{Attachment, MediaRef, ToolRequest, ToolResponse};

pub const DEFAULT_INFLIGHT_CAP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestMedia {
    #[default]
    UploadBytes,
    SharedPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteToolEndpoint {
    pub tool_name: String,
    pub url: String,
    pub timeout_s: f64,
    /// Name of the environment variable holding a bearer token. The token
    /// itself is read at call time and never stored.
    #[serde(default)]
    pub auth: Option<String>,
    #[serde(default)]
    pub request_media: RequestMedia,
}

impl RemoteToolEndpoint {
    pub fn validate(&self) -> Result<(), RemoteError> {
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err(RemoteError::Config(format!(
                "{}: timeout_s must be positive, got {}",
                self.tool_name, self.timeout_s
            )));
        }
        if !(self.url.starts_with("http://") || self.url.starts_with("https://")) {
            return Err(RemoteError::Config(format!(
                "{}: url must be http(s), got {:?}",
                self.tool_name, self.url
            )));
        }
        Ok(())
    }
}

/// Audio handed to a remote tool: raw bytes and, when known, a path the
/// service may read directly.
#[derive(Debug, Clone, Copy)]
pub struct MediaPayload<'a> {
    pub bytes: &'a [u8],
    pub mime: &'a str,
    pub path: Option<&'a Path>,
}

impl MediaPayload<'_> {
    fn to_ref(self, mode: RequestMedia) -> Result<MediaRef, RemoteError> {
        match mode {
            RequestMedia::UploadBytes => Ok(MediaRef::inline(self.mime, self.bytes)),
            RequestMedia::SharedPath => self
                .path
                .map(|p| MediaRef::SharedPath {
                    path: p.display().to_string(),
                })
                .ok_or_else(|| RemoteError::Config("shared_path media requires a file path".into())),
        }
    }
}

pub struct RemoteCall<'a> {
    pub request_id: &'a str,
    pub media: MediaPayload<'a>,
    pub attachments: &'a [(String, MediaPayload<'a>)],
    pub params: &'a Map<String, Value>,
}

/// Counting gate bounding concurrent requests.
struct Gate {
    cap: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.cap {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut active = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.0.freed.notify_one();
    }
}

/// Reentrant client for remote tools; share it by reference across threads.
pub struct RemoteClient {
    agent: ureq::Agent,
    gate: Gate,
}

impl Default for RemoteClient {
    fn default() -> Self {
        Self::new(DEFAULT_INFLIGHT_CAP)
    }
}

impl RemoteClient {
    pub fn new(inflight_cap: usize) -> Self {
        RemoteClient {
            agent: ureq::AgentBuilder::new().build(),
            gate: Gate {
                cap: inflight_cap.max(1),
                active: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }

    pub fn inflight_cap(&self) -> usize {
        self.gate.cap
    }

    /// Sends one request and returns the schema-projected result.
    pub fn call(
        &self,
        endpoint: &RemoteToolEndpoint,
        schema: OutputSchema,
        call: RemoteCall<'_>,
    ) -> Result<Value, RemoteError> {
        endpoint.validate()?;
        let request = ToolRequest {
            request_id: call.request_id.to_string(),
            tool: endpoint.tool_name.clone(),
            media: call.media.to_ref(endpoint.request_media)?,
            attachments: call
                .attachments
                .iter()
                .map(|(name, media)| {
                    Ok(Attachment {
                        name: name.clone(),
                        media: media.to_ref(endpoint.request_media)?,
                    })
                })
                .collect::<Result<_, RemoteError>>()?,
            params: call.params.clone(),
        };
        let body = serde_json::to_string(&request)
            .map_err(|e| RemoteError::Protocol(format!("request encoding: {e}")))?;

        let mut req = self
            .agent
            .post(&endpoint.url)
            .timeout(Duration::from_secs_f64(endpoint.timeout_s))
            .set("Content-Type", "application/json");
        if let Some(var) = &endpoint.auth {
            let token = std::env::var(var)
                .map_err(|_| RemoteError::Config(format!("auth variable {var} is not set")))?;
            req = req.set("Authorization", &format!("Bearer {token}"));
        }

        let text = {
            let _permit = self.gate.acquire();
            let resp = req.send_string(&body).map_err(map_transport)?;
            resp.into_string().map_err(map_io)?
        };

        let parsed: ToolResponse = serde_json::from_str(&text)
            .map_err(|e| RemoteError::Protocol(format!("response body: {e}")))?;
        if parsed.request_id != call.request_id {
            return Err(RemoteError::Protocol(format!(
                "request_id mismatch: sent {}, got {}",
                call.request_id, parsed.request_id
            )));
        }
        schema
            .validate(&parsed.result)
            .map_err(|v| RemoteError::Schema(v.0))
    }
}

fn is_timeout(err: &std::io::Error) -> bool {
    matches!(
        err.kind(),
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
    )
}

fn map_io(err: std::io::Error) -> RemoteError {
    if is_timeout(&err) {
        RemoteError::Timeout
    } else {
        RemoteError::Connection(err.to_string())
    }
}

pub(crate) fn map_transport(err: ureq::Error) -> RemoteError {
    match err {
        ureq::Error::Status(code, resp) => {
            let body = resp.into_string().unwrap_or_default();
            RemoteError::Status {
                code,
                body: body.chars().take(200).collect(),
            }
        }
        ureq::Error::Transport(t) => {
            let timed_out = std::error::Error::source(&t)
                .and_then(|s| s.downcast_ref::<std::io::Error>())
                .is_some_and(is_timeout)
                || t.to_string().contains("timed out");
            if timed_out {
                RemoteError::Timeout
            } else {
                RemoteError::Connection(t.to_string())
            }
        }
    }
}
