//! The text planner: perception prompt, plan, per-round actions, evidence
//! summary and structural format checks.

pub mod format;
pub mod json;
pub mod plan;

use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::action::{ActionKind, FollowUpRequest, PlannerAction, ToolCall};
use crate::backend::{BackendError, ModelBackend, ModelRequest, Purpose, Role};
use crate::ids::ArtifactId;
use crate::record::{EvidenceSource, NewEvidence};
use crate::state::PlannerView;
use crate::templates::{render, Templates};

pub use format::{normalize, resolve_option, validate_format, ExpectedFormat, FormatVerdict};
pub use plan::{build_plan, claims_from_report, CandidateOperation, Claim, ClaimStatus, Plan, PlanOutcome};

/// Summary text used when the run collected nothing beyond the caption.
pub const EMPTY_SUMMARY_MARKER: &str = "[no additional evidence collected]";

/// Rationale of the answer action synthesized when repairs run out.
pub const PARSE_DEGRADED: &str = "parse-degraded";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("round {round} is beyond the round cap {cap}")]
    RoundCap { round: u32, cap: u32 },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Machine-readable reason an action reply was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionParseError {
    NoJsonObject,
    MultipleActions,
    InvalidJson(String),
    UnknownKind(String),
    MissingField(&'static str),
    UnexpectedField(String),
    EmptyCalls,
    InvalidField(String),
}

impl ActionParseError {
    pub fn reason(&self) -> &'static str {
        match self {
            ActionParseError::NoJsonObject => "no JSON object",
            ActionParseError::MultipleActions => "multiple actions",
            ActionParseError::InvalidJson(_) => "invalid JSON",
            ActionParseError::UnknownKind(_) => "unknown kind",
            ActionParseError::MissingField(_) => "missing field",
            ActionParseError::UnexpectedField(_) => "unexpected field",
            ActionParseError::EmptyCalls => "empty calls",
            ActionParseError::InvalidField(_) => "invalid field",
        }
    }
}

impl fmt::Display for ActionParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionParseError::NoJsonObject | ActionParseError::MultipleActions | ActionParseError::EmptyCalls => {
                f.write_str(self.reason())
            }
            ActionParseError::InvalidJson(d) | ActionParseError::InvalidField(d) => write!(f, "{}: {d}", self.reason()),
            ActionParseError::UnknownKind(k) => write!(f, "unknown kind {k:?}"),
            ActionParseError::MissingField(n) => write!(f, "missing field {n}"),
            ActionParseError::UnexpectedField(n) => write!(f, "unexpected field {n}"),
        }
    }
}

impl std::error::Error for ActionParseError {}

fn listening_targets(question: &str, expected: &ExpectedFormat) -> Vec<String> {
    let mut targets = vec![format!("sounds, speech or music that bear directly on: {}", question.trim())];
    match expected {
        ExpectedFormat::MultipleChoice { options } => {
            for (i, o) in options.iter().enumerate() {
                targets.push(format!(
                    "cues that would support or rule out ({}) {}",
                    ExpectedFormat::option_letter(i),
                    o.trim()
                ));
            }
        }
        ExpectedFormat::FreeText { description } => {
            targets.push(format!("details needed for an answer in the form: {}", description.trim()));
        }
    }
    targets.push("when and where in the recording each relevant event occurs".into());
    targets
}

/// Self-contained perception prompt: the question, listening targets and an
/// explicit request to report uncertainty.
pub fn build_perception_prompt(templates: &Templates, question: &str, expected: &ExpectedFormat) -> Result<String, PlannerError> {
    if question.trim().is_empty() {
        return Err(PlannerError::EmptyQuestion);
    }
    let targets: Vec<String> = listening_targets(question, expected)
        .into_iter()
        .map(|t| format!("- {t}"))
        .collect();
    Ok(render(
        &templates.perception,
        &[
            ("question", question.trim()),
            ("expected_format", &expected.describe()),
            ("targets", &targets.join("\n")),
        ],
    ))
}

fn field_str(obj: &Map<String, Value>, name: &'static str) -> Result<String, ActionParseError> {
    match obj.get(name) {
        None | Some(Value::Null) => Err(ActionParseError::MissingField(name)),
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.trim().to_string()),
        Some(Value::String(_)) => Err(ActionParseError::MissingField(name)),
        Some(_) => Err(ActionParseError::InvalidField(format!("{name} must be a string"))),
    }
}

fn parse_call(v: &Value) -> Result<ToolCall, ActionParseError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ActionParseError::InvalidField("each call must be an object".into()))?;
    if let Some(extra) = obj.keys().find(|k| *k != "tool" && *k != "params") {
        return Err(ActionParseError::UnexpectedField(format!("calls[].{extra}")));
    }
    let tool = match obj.get("tool") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        Some(Value::String(_)) | None | Some(Value::Null) => return Err(ActionParseError::MissingField("tool")),
        Some(_) => return Err(ActionParseError::InvalidField("tool must be a string".into())),
    };
    let params = match obj.get("params") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(ActionParseError::InvalidField("params must be an object".into())),
    };
    Ok(ToolCall { tool, params })
}

fn parse_follow_up(v: Option<&Value>) -> Result<FollowUpRequest, ActionParseError> {
    let obj = match v {
        None | Some(Value::Null) => return Err(ActionParseError::MissingField("follow_up_request")),
        Some(Value::Object(o)) => o,
        Some(_) => return Err(ActionParseError::InvalidField("follow_up_request must be an object".into())),
    };
    if let Some(extra) = obj.keys().find(|k| *k != "artifact_ids" && *k != "prompt") {
        return Err(ActionParseError::UnexpectedField(format!("follow_up_request.{extra}")));
    }
    let ids = match obj.get("artifact_ids") {
        None | Some(Value::Null) => return Err(ActionParseError::MissingField("artifact_ids")),
        Some(Value::Array(a)) if a.is_empty() => return Err(ActionParseError::MissingField("artifact_ids")),
        Some(Value::Array(a)) => a
            .iter()
            .map(|i| {
                i.as_str()
                    .and_then(|s| s.parse::<ArtifactId>().ok())
                    .ok_or_else(|| ActionParseError::InvalidField(format!("{i} is not an audio artifact id")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(ActionParseError::InvalidField("artifact_ids must be a list".into())),
    };
    let prompt = field_str(obj, "prompt")?;
    Ok(FollowUpRequest {
        artifact_ids: ids,
        prompt,
    })
}

/// Strict action grammar: exactly one JSON object with a known `kind`, a
/// non-empty `rationale`, and precisely the fields that kind requires.
/// Surrounding prose and code fences are ignored.
pub fn parse_action(raw: &str) -> Result<PlannerAction, ActionParseError> {
    let objects = json::top_level_objects(raw);
    let text = match objects[..] {
        [] => return Err(ActionParseError::NoJsonObject),
        [one] => one,
        _ => return Err(ActionParseError::MultipleActions),
    };
    let value: Value = serde_json::from_str(text).map_err(|e| ActionParseError::InvalidJson(e.to_string()))?;
    let obj = value.as_object().ok_or(ActionParseError::NoJsonObject)?;
    if obj.contains_key("actions") {
        return Err(ActionParseError::MultipleActions);
    }
    let kind_text = match obj.get("kind") {
        None | Some(Value::Null) => return Err(ActionParseError::MissingField("kind")),
        Some(Value::String(s)) => s.trim().to_string(),
        Some(other) => return Err(ActionParseError::UnknownKind(other.to_string())),
    };
    let kind = ActionKind::parse(&kind_text).ok_or(ActionParseError::UnknownKind(kind_text))?;
    let allowed: &[&str] = match kind {
        ActionKind::CallTools => &["kind", "rationale", "calls"],
        ActionKind::FollowUp => &["kind", "rationale", "follow_up_request"],
        ActionKind::Answer => &["kind", "rationale"],
        ActionKind::Fail => &["kind", "rationale", "fail_reason"],
    };
    if let Some(extra) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ActionParseError::UnexpectedField(extra.clone()));
    }
    let rationale = field_str(obj, "rationale")?;
    let mut action = PlannerAction::answer(rationale);
    action.kind = kind;
    match kind {
        ActionKind::CallTools => {
            let calls = match obj.get("calls") {
                None | Some(Value::Null) => return Err(ActionParseError::MissingField("calls")),
                Some(Value::Array(a)) if a.is_empty() => return Err(ActionParseError::EmptyCalls),
                Some(Value::Array(a)) => a.iter().map(parse_call).collect::<Result<Vec<_>, _>>()?,
                Some(_) => return Err(ActionParseError::InvalidField("calls must be a list".into())),
            };
            action.calls = calls;
        }
        ActionKind::FollowUp => action.follow_up_request = Some(parse_follow_up(obj.get("follow_up_request"))?),
        ActionKind::Fail => action.fail_reason = Some(field_str(obj, "fail_reason")?),
        ActionKind::Answer => {}
    }
    debug_assert!(action.check_shape().is_ok());
    Ok(action)
}

/// One planner round as decided, with everything needed for the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: PlannerAction,
    pub replies: Vec<String>,
    pub repair_reasons: Vec<String>,
    pub parse_degraded: bool,
}

/// Checks that do not belong to the grammar but still make an action
/// unusable, e.g. follow-up on artifacts that do not exist.
fn check_against_view(action: &PlannerAction, view: &PlannerView) -> Result<(), String> {
    if let Some(f) = &action.follow_up_request {
        if let Some(bad) = f.artifact_ids.iter().find(|id| !view.artifacts.iter().any(|a| a.id == **id)) {
            return Err(format!("follow_up_request names {bad}, which is not a registered artifact"));
        }
    }
    Ok(())
}

pub struct DecideParams<'a> {
    pub templates: &'a Templates,
    pub temperature: f64,
    pub repair_budget: u32,
    pub round: u32,
    pub round_cap: u32,
}

/// Asks the planner for exactly one action. Unparseable replies get up to
/// `repair_budget` repair reprompts; after that an answer action is
/// synthesized so the run moves to the answer path.
pub fn decide_action(backend: &dyn ModelBackend, view: &PlannerView, p: &DecideParams<'_>) -> Result<Decision, PlannerError> {
    if p.round == 0 || p.round > p.round_cap {
        return Err(PlannerError::RoundCap {
            round: p.round,
            cap: p.round_cap,
        });
    }
    let round = p.round.to_string();
    let cap = p.round_cap.to_string();
    let user = render(
        &p.templates.action,
        &[("round", &round), ("round_cap", &cap), ("view", &view.to_json())],
    );
    let mut req = ModelRequest::new(
        Role::Planner,
        Purpose::Action,
        p.templates.planner_system.trim().to_string(),
        user,
        p.temperature,
    );
    let mut replies = Vec::new();
    let mut repair_reasons = Vec::new();
    loop {
        let reply = backend.complete(&req)?;
        let checked = parse_action(&reply)
            .map_err(|e| e.to_string())
            .and_then(|a| check_against_view(&a, view).map(|_| a));
        replies.push(reply);
        match checked {
            Ok(action) => {
                return Ok(Decision {
                    action,
                    replies,
                    repair_reasons,
                    parse_degraded: false,
                })
            }
            Err(reason) => {
                if repair_reasons.len() as u32 >= p.repair_budget {
                    repair_reasons.push(reason);
                    return Ok(Decision {
                        action: PlannerAction::answer(PARSE_DEGRADED),
                        replies,
                        repair_reasons,
                        parse_degraded: true,
                    });
                }
                req.push_exchange(
                    replies.last().expect("reply just pushed"),
                    render(&p.templates.action_repair, &[("reason", &reason)]),
                );
                repair_reasons.push(reason);
            }
        }
    }
}

const LIST_LIMIT: usize = 8;

/// Short rendering of a payload value: long arrays are reduced to their
/// length and, for per-frame series, their mean.
fn compact(v: &Value) -> String {
    match v {
        Value::Object(m) => {
            if let (Some(mean), Some(Value::Array(values))) = (m.get("mean"), m.get("values")) {
                return format!("mean {} over {} frames", compact(mean), values.len());
            }
            let parts: Vec<String> = m
                .iter()
                .filter(|(k, _)| !matches!(k.as_str(), "frame_times" | "frame_grid" | "envelope"))
                .map(|(k, v)| format!("{k}: {}", compact(v)))
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
        Value::Array(a) if a.len() > LIST_LIMIT => {
            let head: Vec<String> = a.iter().take(LIST_LIMIT).map(compact).collect();
            format!("[{}, ... {} items in total]", head.join(", "), a.len())
        }
        Value::Array(a) => format!("[{}]", a.iter().map(compact).collect::<Vec<_>>().join(", ")),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{}", (f * 1e4).round() / 1e4),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Neutral summary of the evidence log. Every observation is listed with its
/// source in log order; disagreeing observations are all kept and none is
/// preferred. Runs with no evidence beyond the caption get a marker instead.
pub fn summarize_evidence(view: &PlannerView) -> NewEvidence {
    let acquired = view
        .evidence
        .iter()
        .any(|e| matches!(e.source, EvidenceSource::Tool | EvidenceSource::FrontendFollowup));
    if !acquired {
        return NewEvidence::new(
            EvidenceSource::Summary,
            Vec::new(),
            serde_json::json!({"text": EMPTY_SUMMARY_MARKER, "cited_seqs": []}),
        );
    }
    let mut lines = vec!["Observations in the order they were recorded, each with its source:".to_string()];
    let mut subjects: Vec<ArtifactId> = Vec::new();
    let mut cited = Vec::new();
    for e in view.evidence.iter().filter(|e| e.source != EvidenceSource::Summary) {
        let on: Vec<String> = e.subject_artifact_ids.iter().map(ToString::to_string).collect();
        let source = match e.source {
            EvidenceSource::FrontendCaption => "frontend caption".to_string(),
            EvidenceSource::FrontendFollowup => "frontend re-listen".to_string(),
            EvidenceSource::Tool => format!("tool {}", e.tool_name.as_deref().unwrap_or("?")),
            EvidenceSource::Summary => unreachable!(),
        };
        let mut line = format!("- [{}] {source} on {}: {}", e.seq, on.join(", "), compact(&e.payload));
        if let Some(b) = &e.boundary_note {
            line.push_str(&format!(" (boundary: {b})"));
        }
        lines.push(line);
        cited.push(e.seq);
        for id in &e.subject_artifact_ids {
            if !subjects.contains(id) {
                subjects.push(*id);
            }
        }
    }
    lines.push("Where observations differ, each is reported as recorded.".into());
    NewEvidence::new(
        EvidenceSource::Summary,
        subjects,
        serde_json::json!({"text": lines.join("\n"), "cited_seqs": cited}),
    )
}
