use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ids::ArtifactId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    CallTools,
    FollowUp,
    Answer,
    Fail,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [
        ActionKind::CallTools,
        ActionKind::FollowUp,
        ActionKind::Answer,
        ActionKind::Fail,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::CallTools => "call_tools",
            ActionKind::FollowUp => "follow_up",
            ActionKind::Answer => "answer",
            ActionKind::Fail => "fail",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, ActionKind::Answer | ActionKind::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowUpRequest {
    pub artifact_ids: Vec<ArtifactId>,
    pub prompt: String,
}

/// One planner decision. Only the fields belonging to `kind` are populated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerAction {
    pub kind: ActionKind,
    pub rationale: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follow_up_request: Option<FollowUpRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_reason: Option<String>,
}

impl PlannerAction {
    pub fn answer(rationale: impl Into<String>) -> Self {
        PlannerAction {
            kind: ActionKind::Answer,
            rationale: rationale.into(),
            calls: Vec::new(),
            follow_up_request: None,
            fail_reason: None,
        }
    }

    /// Checks that the populated fields match `kind`.
    pub fn check_shape(&self) -> Result<(), String> {
        if self.rationale.trim().is_empty() {
            return Err("rationale is empty".into());
        }
        let has_calls = !self.calls.is_empty();
        let has_follow = self.follow_up_request.is_some();
        let has_fail = self.fail_reason.as_deref().is_some_and(|r| !r.trim().is_empty());
        let expected = match self.kind {
            ActionKind::CallTools => (true, false, false),
            ActionKind::FollowUp => (false, true, false),
            ActionKind::Answer => (false, false, false),
            ActionKind::Fail => (false, false, true),
        };
        if (has_calls, has_follow, has_fail) != expected || (self.fail_reason.is_some() && !has_fail) {
            return Err(format!("fields do not match kind {}", self.kind.as_str()));
        }
        if let Some(f) = &self.follow_up_request {
            if f.artifact_ids.is_empty() || f.prompt.trim().is_empty() {
                return Err("follow_up_request needs artifact ids and a prompt".into());
            }
        }
        Ok(())
    }
}
