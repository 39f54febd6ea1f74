//! Evidence acquisition for audio question answering: a shared evidence
//! state, a bounded tool inventory, an audio-capable frontend, a text planner
//! and the orchestrator that ties them into one replayable run.

pub mod action;
pub mod artifact;
pub mod backend;
pub mod config;
pub mod fixtures;
pub mod frontend;
pub mod ids;
pub mod orchestrator;
pub mod planner;
pub mod record;
pub mod registry;
pub mod state;
pub mod templates;
pub mod tools;
pub mod trace;

pub use action::{ActionKind, FollowUpRequest, PlannerAction, ToolCall};
pub use artifact::{ArtifactSource, AudioArtifact, PlotArtifact, Provenance};
pub use backend::{BackendError, Backends, ChatBackend, ModelBackend, Script, ScriptEntry, ScriptedBackend, ScriptedFailure};
pub use config::{CapBehavior, RunConfig};
pub use ids::{ArtifactId, PlotId};
pub use orchestrator::{BackendProvider, BatchItem, BatchOptions, OrchestratorError, QuestionInput, Runner};
pub use planner::format::{ExpectedFormat, FormatVerdict};
pub use record::{EvidenceItem, EvidenceSource, ToolCallRecord, ToolCallStatus};
pub use registry::{Registry, RegistryConfig, ToolSpec};
pub use state::{EvidenceState, MediaInput, PlannerView};
pub use hearsay_dsp::wav::ExternalDecoder;
pub use templates::Templates;
pub use trace::{export_trace, import_trace, validate_trace, Outcome, RunMode, RunTrace, Termination};
