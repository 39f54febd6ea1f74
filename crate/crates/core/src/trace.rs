//! The exportable run record and its structural validation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::action::{ActionKind, PlannerAction};
use crate::artifact::{ArtifactSource, AudioArtifact, PlotArtifact};
use crate::config::RunConfig;
use crate::ids::ArtifactId;
use crate::planner::format::{ExpectedFormat, FormatVerdict};
use crate::planner::plan::Plan;
use crate::record::{EvidenceItem, EvidenceSource, ToolCallRecord, ToolCallStatus};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace is not valid JSON for this schema: {0}")]
    Schema(String),
    #[error("trace version {found:?} is not supported (expected {TRACE_VERSION})")]
    Version { found: Option<u64> },
    #[error("trace violates an invariant: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Agent,
    /// Frontend-only baseline: one perceive-and-answer call, no planning.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Answered,
    Failed,
}

/// Why the planning loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The planner emitted an answer or fail action.
    Action,
    RoundCap,
    WallClock,
    /// A model backend was unreachable or refused the request.
    BackendError,
    /// The question's audio could not be registered.
    InputError,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub run: RunConfig,
    /// Enabled tool names at run time.
    pub inventory: Vec<String>,
    pub frontend_backend: String,
    pub planner_backend: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionRecord {
    pub prompt: String,
    pub evidence_seq: u64,
    pub replies: Vec<String>,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRecord {
    pub plan: Plan,
    pub replies: Vec<String>,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundRecord {
    pub index: u32,
    pub action: PlannerAction,
    /// Raw planner replies for this round, including rejected ones.
    pub replies: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repair_reasons: Vec<String>,
    /// The action was synthesized after the repair budget ran out.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub parse_degraded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCallRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follow_up_seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerDraft {
    pub text: String,
    pub verdict: FormatVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunTrace {
    pub version: u32,
    pub question_id: String,
    pub question: String,
    pub expected_format: ExpectedFormat,
    pub mode: RunMode,
    pub config_snapshot: ConfigSnapshot,
    pub artifacts: Vec<AudioArtifact>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plots: Vec<PlotArtifact>,
    pub evidence: Vec<EvidenceItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perception: Option<PerceptionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanRecord>,
    pub rounds: Vec<RoundRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_seq: Option<u64>,
    pub answer_drafts: Vec<AnswerDraft>,
    pub best_effort: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_reason: Option<String>,
}

impl RunTrace {
    pub fn final_answer(&self) -> Option<&str> {
        match self.outcome {
            Some(Outcome::Answered) => self.answer_drafts.last().map(|d| d.text.as_str()),
            _ => None,
        }
    }

    pub fn tool_calls(&self) -> impl Iterator<Item = &ToolCallRecord> {
        self.rounds.iter().flat_map(|r| r.tool_calls.iter())
    }

    pub fn follow_up_count(&self) -> usize {
        self.rounds.iter().filter(|r| r.follow_up_seq.is_some()).count()
    }
}

/// Canonical serialized form; stable under import/export.
pub fn export_trace(trace: &RunTrace) -> String {
    let mut s = serde_json::to_string_pretty(trace).expect("trace serializes");
    s.push('\n');
    s
}

pub fn import_trace(text: &str) -> Result<RunTrace, TraceError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| TraceError::Schema(e.to_string()))?;
    let version = raw.get("version").and_then(Value::as_u64);
    if version != Some(TRACE_VERSION as u64) {
        return Err(TraceError::Version { found: version });
    }
    let trace: RunTrace = serde_json::from_value(raw).map_err(|e| TraceError::Schema(e.to_string()))?;
    validate_trace(&trace)?;
    Ok(trace)
}

fn fail<T>(msg: impl Into<String>) -> Result<T, TraceError> {
    Err(TraceError::Invariant(msg.into()))
}

/// Checks every structural invariant of a (finished or in-progress) trace.
pub fn validate_trace(t: &RunTrace) -> Result<(), TraceError> {
    if t.version != TRACE_VERSION {
        return Err(TraceError::Version {
            found: Some(t.version as u64),
        });
    }
    let cap = t.config_snapshot.run.round_cap;
    let n_art = t.artifacts.len();
    let resolves = |id: &ArtifactId| id.index() < n_art;

    for (i, a) in t.artifacts.iter().enumerate() {
        if a.id.index() != i {
            return fail(format!("artifact {} registered at position {i}", a.id));
        }
        match (a.source, &a.provenance) {
            (ArtifactSource::Original, Some(_)) => return fail(format!("original {} has provenance", a.id)),
            (ArtifactSource::Derived, None) => return fail(format!("derived {} lacks provenance", a.id)),
            (ArtifactSource::Derived, Some(p)) if p.parent >= a.id => {
                return fail(format!("{} cites parent {} not registered earlier", a.id, p.parent))
            }
            _ => {}
        }
        let hex_ok = a.media.sha256.len() == 64
            && a.media.sha256.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if !hex_ok {
            return fail(format!("{} media hash is not lowercase hex SHA-256", a.id));
        }
        if !(a.duration_s.is_finite() && a.duration_s > 0.0) || a.sample_rate_hz == 0 || a.channels == 0 {
            return fail(format!("{} has empty or invalid stream properties", a.id));
        }
    }
    for (i, p) in t.plots.iter().enumerate() {
        if p.id.index() != i {
            return fail(format!("plot {} registered at position {i}", p.id));
        }
        if !resolves(&p.parent) {
            return fail(format!("plot {} has unknown parent {}", p.id, p.parent));
        }
    }

    for (i, e) in t.evidence.iter().enumerate() {
        if e.seq != i as u64 {
            return fail(format!("evidence seq {} at position {i}", e.seq));
        }
        let named = e.tool_name.as_deref().is_some_and(|n| !n.is_empty());
        if (e.source == EvidenceSource::Tool) != named {
            return fail(format!("evidence {} tool_name does not match its source", e.seq));
        }
        if let Some(bad) = e.subject_artifact_ids.iter().find(|id| !resolves(id)) {
            return fail(format!("evidence {} cites unknown artifact {bad}", e.seq));
        }
    }
    let evidence_of = |seq: u64, source: EvidenceSource| -> Result<&EvidenceItem, TraceError> {
        match t.evidence.get(seq as usize) {
            Some(e) if e.source == source => Ok(e),
            _ => Err(TraceError::Invariant(format!("seq {seq} is not {source:?} evidence"))),
        }
    };
    if let Some(p) = &t.perception {
        evidence_of(p.evidence_seq, EvidenceSource::FrontendCaption)?;
    }
    if let Some(s) = t.summary_seq {
        evidence_of(s, EvidenceSource::Summary)?;
    }
    if let Some(p) = &t.plan {
        if p.plan.expected_format.trim().is_empty() || p.plan.claims.is_empty() {
            return fail("plan needs an expected format and at least one claim");
        }
    }

    if t.rounds.len() > cap as usize {
        return fail(format!("{} rounds exceed the cap of {cap}", t.rounds.len()));
    }
    let inventory: BTreeSet<&str> = t.config_snapshot.inventory.iter().map(String::as_str).collect();
    let mut produced: BTreeSet<ArtifactId> = BTreeSet::new();
    let mut terminal_rounds = Vec::new();
    for (i, r) in t.rounds.iter().enumerate() {
        if r.index != i as u32 + 1 {
            return fail(format!("round index {} at position {i}", r.index));
        }
        r.action
            .check_shape()
            .map_err(|m| TraceError::Invariant(format!("round {}: {m}", r.index)))?;
        if r.action.kind.is_terminal() {
            terminal_rounds.push(i);
        }
        if r.action.kind == ActionKind::CallTools {
            if r.tool_calls.len() != r.action.calls.len() {
                return fail(format!("round {}: {} calls requested, {} recorded", r.index, r.action.calls.len(), r.tool_calls.len()));
            }
        } else if !r.tool_calls.is_empty() {
            return fail(format!("round {} records tool calls for a non-tool action", r.index));
        }
        match (r.action.kind, r.follow_up_seq) {
            (ActionKind::FollowUp, Some(seq)) => {
                evidence_of(seq, EvidenceSource::FrontendFollowup)?;
            }
            (ActionKind::FollowUp, None) => {}
            (_, Some(_)) => return fail(format!("round {} has a follow-up it did not request", r.index)),
            _ => {}
        }
        for c in &r.tool_calls {
            if c.round != r.index {
                return fail(format!("call {} filed under round {} claims round {}", c.tool_name, r.index, c.round));
            }
            match c.status {
                ToolCallStatus::Ok => {
                    if c.produced_evidence_seq.is_none() && c.produced_artifact_ids.is_empty() {
                        return fail(format!("ok call {} produced nothing", c.tool_name));
                    }
                }
                ToolCallStatus::RejectedUnknownTool => {
                    if inventory.contains(c.tool_name.as_str()) {
                        return fail(format!("{} was rejected as unknown but is in the inventory", c.tool_name));
                    }
                }
                _ => {}
            }
            if c.status != ToolCallStatus::Ok
                && (c.produced_evidence_seq.is_some() || !c.produced_artifact_ids.is_empty())
            {
                return fail(format!("failed call {} has side effects", c.tool_name));
            }
            if let Some(seq) = c.produced_evidence_seq {
                let e = evidence_of(seq, EvidenceSource::Tool)?;
                if e.tool_name.as_deref() != Some(c.tool_name.as_str()) {
                    return fail(format!("evidence {seq} is attributed to a different tool"));
                }
            }
            for id in &c.produced_artifact_ids {
                let Some(a) = t.artifacts.get(id.index()) else {
                    return fail(format!("call {} cites unknown artifact {id}", c.tool_name));
                };
                if a.provenance.as_ref().map(|p| p.tool.as_str()) != Some(c.tool_name.as_str()) {
                    return fail(format!("{id} provenance does not name {}", c.tool_name));
                }
                if !produced.insert(*id) {
                    return fail(format!("{id} claimed by two calls"));
                }
            }
        }
    }
    if terminal_rounds.len() > 1 {
        return fail("more than one round carries an answer or fail action");
    }
    if let Some(&i) = terminal_rounds.first() {
        if i + 1 != t.rounds.len() {
            return fail("the answer or fail action is not the last round");
        }
    }

    match t.termination {
        Some(Termination::Action) if terminal_rounds.is_empty() => {
            return fail("terminated by action but no round carries answer or fail")
        }
        Some(Termination::RoundCap) if t.rounds.len() != cap as usize || !terminal_rounds.is_empty() => {
            return fail("round-cap termination needs exactly cap rounds and no terminal action")
        }
        Some(Termination::WallClock) if !terminal_rounds.is_empty() => {
            return fail("wall-clock termination after a terminal action")
        }
        Some(Termination::BackendError | Termination::InputError) if t.outcome != Some(Outcome::Failed) => {
            return fail("backend and input errors must fail the run")
        }
        Some(Termination::Direct) if t.mode != RunMode::Direct || !t.rounds.is_empty() => {
            return fail("direct termination outside direct mode")
        }
        None if t.outcome.is_some() => return fail("finished run without a termination cause"),
        _ => {}
    }
    if t.mode == RunMode::Direct && !t.rounds.is_empty() {
        return fail("direct runs have no planner rounds");
    }

    match t.outcome {
        Some(Outcome::Answered) => {
            let Some(last) = t.answer_drafts.last() else {
                return fail("answered run has no answer draft");
            };
            if !last.verdict.valid && !t.best_effort {
                return fail("answered run ends on an invalid draft without the best-effort flag");
            }
            if t.rounds.last().is_some_and(|r| r.action.kind == ActionKind::Fail) {
                return fail("fail action with answered outcome");
            }
        }
        Some(Outcome::Failed) => {
            if t.fail_reason.as_deref().map_or(true, |r| r.trim().is_empty()) {
                return fail("failed run without a fail reason");
            }
        }
        None => {}
    }
    for d in &t.answer_drafts {
        if !d.verdict.valid && d.verdict.structural_feedback.as_deref().map_or(true, str::is_empty) {
            return fail("invalid verdict without structural feedback");
        }
    }
    Ok(())
}
