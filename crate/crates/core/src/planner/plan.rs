use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::backend::{BackendError, ModelBackend, ModelRequest, Purpose, Role};
use crate::frontend::PerceptionReport;
use crate::planner::format::ExpectedFormat;
use crate::planner::json::top_level_objects;
use crate::templates::{render, Templates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimStatus {
    AnswerableByPerception,
    NeedsVerification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Claim {
    pub claim: String,
    pub status: ClaimStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateOperation {
    pub description: String,
    pub candidate_tools: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub clarified_intent: String,
    pub expected_format: String,
    pub focus_points: Vec<String>,
    pub candidate_operations: Vec<CandidateOperation>,
    pub claims: Vec<Claim>,
}

/// Claims derived from the caption. Stated uncertainties always need
/// verification; observations are taken as answerable by perception; the
/// preliminary answer needs verification whenever any uncertainty was stated.
pub fn claims_from_report(report: &PerceptionReport) -> Vec<Claim> {
    let mut claims: Vec<Claim> = report
        .focus_points
        .iter()
        .map(|f| Claim {
            claim: f.clone(),
            status: ClaimStatus::AnswerableByPerception,
        })
        .collect();
    claims.extend(report.uncertainties.iter().map(|u| Claim {
        claim: u.clone(),
        status: ClaimStatus::NeedsVerification,
    }));
    if let Some(p) = &report.preliminary_answer {
        let status = if report.uncertainties.is_empty() {
            ClaimStatus::AnswerableByPerception
        } else {
            ClaimStatus::NeedsVerification
        };
        let claim = match report.confidence {
            Some(c) => format!("preliminary answer {p} (confidence {c})"),
            None => format!("preliminary answer {p}"),
        };
        claims.push(Claim { claim, status });
    }
    if claims.is_empty() {
        claims.push(Claim {
            claim: report.description.clone(),
            status: ClaimStatus::AnswerableByPerception,
        });
    }
    claims
}

fn string_list(v: Option<&Value>, field: &str) -> Result<Vec<String>, String> {
    match v {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| {
                i.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format!("{field} must contain strings"))
            })
            .collect(),
        Some(_) => Err(format!("{field} must be an array")),
    }
}

/// Parses the planner's plan reply into intent, focus points and candidate
/// operations.
pub fn parse_plan_reply(reply: &str) -> Result<(String, Vec<String>, Vec<CandidateOperation>), String> {
    let objects = top_level_objects(reply);
    let [raw] = objects[..] else {
        return Err(if objects.is_empty() {
            "no JSON object".into()
        } else {
            "more than one JSON object".into()
        });
    };
    let v: Value = serde_json::from_str(raw).map_err(|e| format!("invalid JSON: {e}"))?;
    let intent = v
        .get("clarified_intent")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or("missing field clarified_intent")?
        .to_string();
    let focus = string_list(v.get("focus_points"), "focus_points")?;
    let ops = match v.get("candidate_operations") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| {
                let description = i
                    .get("description")
                    .and_then(Value::as_str)
                    .ok_or("candidate operation missing description")?
                    .to_string();
                let candidate_tools = string_list(i.get("candidate_tools"), "candidate_tools")?;
                Ok(CandidateOperation {
                    description,
                    candidate_tools,
                })
            })
            .collect::<Result<_, String>>()?,
        Some(_) => return Err("candidate_operations must be an array".into()),
    };
    Ok((intent, focus, ops))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: Plan,
    pub replies: Vec<String>,
    pub degraded: bool,
}

/// Asks the planner for a plan. One repair reprompt, then a minimal plan built
/// from the question and the caption alone.
pub fn build_plan(
    backend: &dyn ModelBackend,
    templates: &Templates,
    temperature: f64,
    question: &str,
    expected: &ExpectedFormat,
    report: &PerceptionReport,
    inventory_text: &str,
) -> Result<PlanOutcome, BackendError> {
    let report_json = serde_json::to_string_pretty(report).expect("report serializes");
    let expected_text = expected.describe();
    let user = render(
        &templates.plan,
        &[
            ("question", question),
            ("expected_format", &expected_text),
            ("report", &report_json),
            ("inventory", inventory_text),
        ],
    );
    let mut req = ModelRequest::new(
        Role::Planner,
        Purpose::Plan,
        templates.planner_system.trim().to_string(),
        user,
        temperature,
    );
    let mut replies = Vec::new();
    let mut parsed = None;
    for attempt in 0..2 {
        let reply = backend.complete(&req)?;
        match parse_plan_reply(&reply) {
            Ok(p) => {
                replies.push(reply);
                parsed = Some(p);
                break;
            }
            Err(reason) => {
                if attempt == 0 {
                    req.push_exchange(&reply, render(&templates.plan_repair, &[("reason", &reason)]));
                }
                replies.push(reply);
            }
        }
    }
    let degraded = parsed.is_none();
    let (clarified_intent, focus_points, candidate_operations) =
        parsed.unwrap_or_else(|| (question.trim().to_string(), report.focus_points.clone(), Vec::new()));
    Ok(PlanOutcome {
        plan: Plan {
            clarified_intent,
            expected_format: expected_text,
            focus_points,
            candidate_operations,
            claims: claims_from_report(report),
        },
        replies,
        degraded,
    })
}
