//! Minimal output schemas for model-backed tools. Responses are validated and
//! projected onto the declared fields before anything reaches the evidence log.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSchema {
    /// `{text}`
    Transcript,
    /// `{segments: [{start_s, end_s, text}]}`
    TimedTranscript,
    /// `{segments: [{start_s, end_s, text, speaker_label}]}`
    DiarizedTranscript,
    /// `{segments: [{start_s, end_s, speaker_label}]}`
    Diarization,
    /// `{score in [0,1], same_speaker}`
    SpeakerVerification,
    /// `{regions: [{start_s, end_s}]}`
    SpeechRegions,
    /// `{regions: [{start_s, end_s, label}]}`
    LabeledRegions,
    /// `{chords: [{start_s, end_s, label}]}`
    ChordTimeline,
    /// `{observation}`
    PlotInspection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaViolation(pub String);

impl std::fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn obj<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>, SchemaViolation> {
    v.as_object()
        .ok_or_else(|| SchemaViolation(format!("{at}: expected object")))
}

fn string(m: &Map<String, Value>, key: &str, at: &str, non_empty: bool) -> Result<String, SchemaViolation> {
    let s = m
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| SchemaViolation(format!("{at}.{key}: expected string")))?;
    if non_empty && s.trim().is_empty() {
        return Err(SchemaViolation(format!("{at}.{key}: must be non-empty")));
    }
    Ok(s.to_string())
}

fn number(m: &Map<String, Value>, key: &str, at: &str) -> Result<f64, SchemaViolation> {
    m.get(key)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or_else(|| SchemaViolation(format!("{at}.{key}: expected finite number")))
}

fn span(m: &Map<String, Value>, at: &str) -> Result<(f64, f64), SchemaViolation> {
    let start = number(m, "start_s", at)?;
    let end = number(m, "end_s", at)?;
    if start < 0.0 || end < start {
        return Err(SchemaViolation(format!(
            "{at}: need 0 <= start_s <= end_s, got [{start}, {end}]"
        )));
    }
    Ok((start, end))
}

fn list<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a Vec<Value>, SchemaViolation> {
    m.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| SchemaViolation(format!("$.{key}: expected array")))
}

fn timed_list(
    m: &Map<String, Value>,
    key: &str,
    text_fields: &[&str],
) -> Result<Value, SchemaViolation> {
    let items = list(m, key)?
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let at = format!("$.{key}[{i}]");
            let o = obj(item, &at)?;
            let (start, end) = span(o, &at)?;
            let mut out = Map::new();
            out.insert("start_s".into(), json!(start));
            out.insert("end_s".into(), json!(end));
            for f in text_fields {
                out.insert((*f).into(), json!(string(o, f, &at, false)?));
            }
            Ok(Value::Object(out))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({ key: items }))
}

impl OutputSchema {
    /// Validates `result` and returns its projection onto the schema fields.
    pub fn validate(self, result: &Value) -> Result<Value, SchemaViolation> {
        let m = obj(result, "$")?;
        match self {
            OutputSchema::Transcript => Ok(json!({ "text": string(m, "text", "$", false)? })),
            OutputSchema::TimedTranscript => timed_list(m, "segments", &["text"]),
            OutputSchema::DiarizedTranscript => timed_list(m, "segments", &["text", "speaker_label"]),
            OutputSchema::Diarization => timed_list(m, "segments", &["speaker_label"]),
            OutputSchema::SpeechRegions => timed_list(m, "regions", &[]),
            OutputSchema::LabeledRegions => timed_list(m, "regions", &["label"]),
            OutputSchema::ChordTimeline => timed_list(m, "chords", &["label"]),
            OutputSchema::SpeakerVerification => {
                let score = number(m, "score", "$")?;
                if !(0.0..=1.0).contains(&score) {
                    return Err(SchemaViolation(format!("$.score: {score} outside [0, 1]")));
                }
                let same = m
                    .get("same_speaker")
                    .and_then(Value::as_bool)
                    .ok_or_else(|| SchemaViolation("$.same_speaker: expected bool".into()))?;
                Ok(json!({ "score": score, "same_speaker": same }))
            }
            OutputSchema::PlotInspection => {
                Ok(json!({ "observation": string(m, "observation", "$", true)? }))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timed_transcript_projects_known_fields() {
        let v = json!({"segments": [{"start_s": 0.0, "end_s": 1.5, "text": "hi", "conf": 0.9}], "lang": "en"});
        let out = OutputSchema::TimedTranscript.validate(&v).unwrap();
        assert_eq!(out, json!({"segments": [{"start_s": 0.0, "end_s": 1.5, "text": "hi"}]}));
    }

    #[test]
    fn reversed_span_rejected() {
        let v = json!({"segments": [{"start_s": 2.0, "end_s": 1.0, "speaker_label": "S1"}]});
        assert!(OutputSchema::Diarization.validate(&v).is_err());
    }

    #[test]
    fn verification_score_bounds() {
        assert!(OutputSchema::SpeakerVerification
            .validate(&json!({"score": 1.2, "same_speaker": true}))
            .is_err());
        assert!(OutputSchema::SpeakerVerification
            .validate(&json!({"score": 0.8, "same_speaker": true}))
            .is_ok());
    }

    #[test]
    fn non_object_rejected() {
        assert!(OutputSchema::Transcript.validate(&json!("text")).is_err());
        assert!(OutputSchema::PlotInspection.validate(&json!({"observation": "  "})).is_err());
    }
}
