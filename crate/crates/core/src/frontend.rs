//! The audio-capable frontend: question-oriented perception, targeted
//! re-listening and final answering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{AudioInput, BackendError, ModelBackend, ModelRequest, Purpose, Role};
use crate::ids::ArtifactId;
use crate::templates::{render, Templates};

/// Placeholder used when the frontend returns nothing at all.
pub const EMPTY_REPLY_MARKER: &str = "[empty frontend reply]";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontendError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("no audio supplied")]
    NoAudio,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionReport {
    pub description: String,
    pub focus_points: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preliminary_answer: Option<String>,
    pub uncertainties: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl PerceptionReport {
    fn degraded(raw: &str) -> Self {
        let text = raw.trim();
        PerceptionReport {
            description: if text.is_empty() {
                EMPTY_REPLY_MARKER.to_string()
            } else {
                text.to_string()
            },
            focus_points: Vec::new(),
            preliminary_answer: None,
            uncertainties: Vec::new(),
            confidence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FollowUpReport {
    pub subject_artifact_ids: Vec<ArtifactId>,
    pub prompt_used: String,
    pub observation: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Description,
    Focus,
    Preliminary,
    Uncertainty,
    Confidence,
}

fn section_header(line: &str) -> Option<(Section, &str)> {
    let stripped = line.trim_start().trim_start_matches(['#', '*', ' ']);
    let (head, rest) = stripped.split_once(':')?;
    let head = head.trim().trim_end_matches('*').trim().to_ascii_uppercase();
    let section = match head.as_str() {
        "DESCRIPTION" => Section::Description,
        "FOCUS" | "FOCUS POINTS" => Section::Focus,
        "PRELIMINARY" | "PRELIMINARY ANSWER" => Section::Preliminary,
        "UNCERTAINTY" | "UNCERTAINTIES" => Section::Uncertainty,
        "CONFIDENCE" => Section::Confidence,
        _ => return None,
    };
    Some((section, rest.trim_start_matches('*')))
}

fn bullet_items(body: &str) -> Vec<String> {
    body.lines()
        .map(|l| {
            let t = l.trim();
            let t = t.trim_start_matches(['-', '*', '\u{2022}']).trim_start();
            let digits = t.chars().take_while(char::is_ascii_digit).count();
            let t = if digits > 0 && t[digits..].starts_with(['.', ')']) {
                t[digits + 1..].trim_start()
            } else {
                t
            };
            t.to_string()
        })
        .filter(|t| !t.is_empty() && !is_none_word(t))
        .collect()
}

fn is_none_word(t: &str) -> bool {
    matches!(
        t.trim().trim_end_matches('.').to_ascii_lowercase().as_str(),
        "none" | "n/a" | "na" | "-"
    )
}

fn parse_confidence(body: &str) -> Result<f64, String> {
    let t = body.trim();
    let (num, pct) = match t.strip_suffix('%') {
        Some(n) => (n.trim(), true),
        None => (t, false),
    };
    let v: f64 = num
        .parse()
        .map_err(|_| format!("CONFIDENCE {t:?} is not a number"))?;
    let v = if pct { v / 100.0 } else { v };
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("CONFIDENCE {t:?} is outside [0, 1]"));
    }
    Ok(v)
}

/// Parses a tagged-section reply. Sections may appear in any order; text
/// before the first section is ignored.
pub fn parse_report(text: &str) -> Result<PerceptionReport, String> {
    let mut bodies: Vec<(Section, String)> = Vec::new();
    for line in text.lines() {
        if let Some((section, rest)) = section_header(line) {
            if bodies.iter().any(|(s, _)| *s == section) {
                return Err(format!("duplicate section {section:?}"));
            }
            bodies.push((section, rest.trim().to_string()));
        } else if let Some((_, body)) = bodies.last_mut() {
            body.push('\n');
            body.push_str(line);
        }
    }
    let get = |s: Section| bodies.iter().find(|(k, _)| *k == s).map(|(_, b)| b.trim().to_string());

    let description = get(Section::Description).unwrap_or_default();
    if description.is_empty() {
        return Err("missing DESCRIPTION".into());
    }
    let preliminary_answer = get(Section::Preliminary).filter(|p| !p.is_empty() && !is_none_word(p));
    let confidence = match get(Section::Confidence) {
        Some(c) if !c.is_empty() && !is_none_word(&c) => Some(parse_confidence(&c)?),
        _ => None,
    };
    if confidence.is_some() && preliminary_answer.is_none() {
        return Err("CONFIDENCE given without a PRELIMINARY answer".into());
    }
    Ok(PerceptionReport {
        description,
        focus_points: bullet_items(&get(Section::Focus).unwrap_or_default()),
        preliminary_answer,
        uncertainties: bullet_items(&get(Section::Uncertainty).unwrap_or_default()),
        confidence,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perception {
    pub report: PerceptionReport,
    /// Every raw reply, in order; two entries when a repair happened.
    pub replies: Vec<String>,
    pub degraded: bool,
}

/// Question-oriented perception with one structured-repair reprompt.
pub fn perceive(
    backend: &dyn ModelBackend,
    templates: &Templates,
    temperature: f64,
    audio: Vec<AudioInput>,
    perception_prompt: &str,
) -> Result<Perception, FrontendError> {
    if perception_prompt.trim().is_empty() {
        return Err(FrontendError::EmptyPrompt);
    }
    if audio.is_empty() {
        return Err(FrontendError::NoAudio);
    }
    let mut req = ModelRequest::new(
        Role::Frontend,
        Purpose::Perception,
        templates.frontend_system.trim().to_string(),
        perception_prompt.to_string(),
        temperature,
    )
    .with_audio(audio);
    let first = backend.complete(&req)?;
    let reason = match parse_report(&first) {
        Ok(report) => {
            return Ok(Perception {
                report,
                replies: vec![first],
                degraded: false,
            })
        }
        Err(reason) => reason,
    };
    req.push_exchange(&first, render(&templates.perception_repair, &[("reason", &reason)]));
    let second = backend.complete(&req)?;
    Ok(match parse_report(&second) {
        Ok(report) => Perception {
            report,
            replies: vec![first, second],
            degraded: false,
        },
        Err(_) => Perception {
            report: PerceptionReport::degraded(&second),
            replies: vec![first, second],
            degraded: true,
        },
    })
}

/// Planner-requested re-listening on selected artifacts.
pub fn follow_up(
    backend: &dyn ModelBackend,
    templates: &Templates,
    temperature: f64,
    audio: Vec<AudioInput>,
    focused_prompt: &str,
) -> Result<FollowUpReport, FrontendError> {
    if focused_prompt.trim().is_empty() {
        return Err(FrontendError::EmptyPrompt);
    }
    if audio.is_empty() {
        return Err(FrontendError::NoAudio);
    }
    let ids: Vec<ArtifactId> = audio.iter().map(|a| a.artifact_id).collect();
    let id_list: Vec<String> = ids.iter().map(ToString::to_string).collect();
    let text = render(
        &templates.follow_up,
        &[("artifact_ids", &id_list.join(", ")), ("prompt", focused_prompt.trim())],
    );
    let req = ModelRequest::new(
        Role::Frontend,
        Purpose::FollowUp,
        templates.frontend_system.trim().to_string(),
        text,
        temperature,
    )
    .with_audio(audio);
    let reply = backend.complete(&req)?;
    let observation = reply.trim();
    Ok(FollowUpReport {
        subject_artifact_ids: ids,
        prompt_used: focused_prompt.trim().to_string(),
        observation: if observation.is_empty() {
            EMPTY_REPLY_MARKER.to_string()
        } else {
            observation.to_string()
        },
    })
}

/// Audio that is guaranteed to consist of original inputs only. Built by the
/// evidence state, so derived clips cannot reach final answering.
#[derive(Debug, Clone)]
pub struct OriginalAudio(pub(crate) Vec<AudioInput>);

impl OriginalAudio {
    pub fn ids(&self) -> Vec<ArtifactId> {
        self.0.iter().map(|a| a.artifact_id).collect()
    }
}

/// Builds the final-answer request. The caller sends it and extends it with
/// structural feedback for retries; drafts are used verbatim.
pub fn final_answer_request(
    templates: &Templates,
    temperature: f64,
    originals: OriginalAudio,
    question: &str,
    expected_format: &str,
    evidence_summary: &str,
) -> ModelRequest {
    let text = render(
        &templates.final_answer,
        &[
            ("question", question),
            ("expected_format", expected_format),
            ("summary", evidence_summary),
        ],
    );
    ModelRequest::new(
        Role::Frontend,
        Purpose::FinalAnswer,
        templates.frontend_system.trim().to_string(),
        text,
        temperature,
    )
    .with_audio(originals.0)
}

pub fn direct_answer_request(
    templates: &Templates,
    temperature: f64,
    originals: OriginalAudio,
    question: &str,
    expected_format: &str,
) -> ModelRequest {
    let text = render(
        &templates.direct,
        &[("question", question), ("expected_format", expected_format)],
    );
    ModelRequest::new(
        Role::Frontend,
        Purpose::FinalAnswer,
        templates.frontend_system.trim().to_string(),
        text,
        temperature,
    )
    .with_audio(originals.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOT_WATER: &str = "DESCRIPTION: Two pouring events, segment 1 at 3-8 s and segment 2 at 19-24 s.\n\
        FOCUS:\n- pouring texture of each segment\n- any steam or sizzle\n\
        PRELIMINARY: A\n\
        UNCERTAINTY:\n- acoustic evidence is insufficient\n- no audible steam hiss\n\
        CONFIDENCE: 0.3";

    #[test]
    fn parses_all_sections() {
        let r = parse_report(HOT_WATER).unwrap();
        assert!(r.description.contains("3-8 s"));
        assert_eq!(r.focus_points.len(), 2);
        assert_eq!(r.preliminary_answer.as_deref(), Some("A"));
        assert_eq!(r.uncertainties[0], "acoustic evidence is insufficient");
        assert_eq!(r.confidence, Some(0.3));
    }

    #[test]
    fn order_and_case_tolerant() {
        let r = parse_report("confidence: 30%\n**Preliminary**: B\nDescription: a dog barks\nUncertainty: none").unwrap();
        assert_eq!(r.confidence, Some(0.3));
        assert_eq!(r.preliminary_answer.as_deref(), Some("B"));
        assert!(r.uncertainties.is_empty());
    }

    #[test]
    fn rejects_structural_problems() {
        assert!(parse_report("just some prose").is_err());
        assert!(parse_report("DESCRIPTION: x\nCONFIDENCE: 0.4").is_err());
        assert!(parse_report("DESCRIPTION: x\nPRELIMINARY: A\nCONFIDENCE: 1.7").is_err());
        assert!(parse_report("DESCRIPTION: x\nDESCRIPTION: y").is_err());
    }
}
