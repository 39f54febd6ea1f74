//! HTTP access to model-backed audio tools.
//!
//! Every tool shares one request shape ([`ToolRequest`]); responses are checked
//! against a minimal [`OutputSchema`] before the caller sees them. Failures of
//! any kind come back as [`RemoteError`] values for the caller to record.

mod chat;
mod client;
mod error;
mod schema;
mod stub;
mod wire;

pub use chat::{parse_completion, ChatClient, ChatEndpoint, ChatError, ChatMessage, ChatPart};
pub use client::{
    MediaPayload, RemoteCall, RemoteClient, RemoteToolEndpoint, RequestMedia, DEFAULT_INFLIGHT_CAP,
};
pub use error::RemoteError;
pub use schema::{OutputSchema, SchemaViolation};
pub use stub::{StubEntry, StubError, StubResponse, StubScript, StubServer, CHAT_ROUTE, TOOL_ROUTE_PREFIX};
pub use wire::{Attachment, MediaRef, ToolRequest, ToolResponse};
