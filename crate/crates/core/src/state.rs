//! The shared evidence state of one run. All writes are append-only and go
//! through `&mut self`, so a run has exactly one writer.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use hearsay_dsp::plot::{PlotImage, PlotKind};
use hearsay_dsp::wav::{decode_media, encode_wav_f32, ExternalDecoder};
use hearsay_dsp::{Audio, DspError};

use crate::action::ActionKind;
use crate::artifact::{sha256_hex, ArtifactSource, AudioArtifact, MediaRef, PlotArtifact, Provenance};
use crate::backend::AudioInput;
use crate::frontend::OriginalAudio;
use crate::ids::{ArtifactId, PlotId};
use crate::planner::plan::Plan;
use crate::record::{EvidenceItem, EvidenceSource, NewEvidence, ToolCallRecord};
use crate::registry::PlannerToolSpec;
use crate::trace::{
    AnswerDraft, ConfigSnapshot, Outcome, PerceptionRecord, PlanRecord, RoundRecord, RunMode, RunTrace,
    Termination, TRACE_VERSION,
};
use crate::planner::format::ExpectedFormat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("undecodable media: {0}")]
    Decode(#[from] DspError),
    #[error("unknown provenance parent {0}")]
    UnknownParent(ArtifactId),
    #[error("unknown artifact {0}")]
    UnknownArtifact(ArtifactId),
    #[error("invalid evidence item: {0}")]
    InvalidEvidence(String),
    #[error("media for {0} is not loaded (imported trace)")]
    NoMedia(ArtifactId),
    #[error("{0} is already recorded")]
    AlreadySet(&'static str),
    #[error("run is already finished")]
    Finished,
}

/// Raw media handed to the state for registration.
#[derive(Debug, Clone)]
pub struct MediaInput {
    pub bytes: Arc<Vec<u8>>,
    /// Path recorded in the trace, as given by the caller.
    pub path: String,
    /// Filesystem location, if any; used by the external decoder and by
    /// remote tools configured for shared paths.
    pub file: Option<PathBuf>,
}

#[derive(Debug)]
struct StoredAudio {
    bytes: Arc<Vec<u8>>,
    file: Option<PathBuf>,
    decoded: Arc<Audio>,
}

/// Artifact summary as shown to the planner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactView {
    pub id: ArtifactId,
    pub source: ArtifactSource,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub channels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationaleEntry {
    pub round: u32,
    pub kind: ActionKind,
    pub rationale: String,
}

/// Read-only view for one planner decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerView {
    pub question: String,
    pub expected_format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    pub artifacts: Vec<ArtifactView>,
    pub evidence: Vec<EvidenceItem>,
    pub tool_calls: Vec<ToolCallRecord>,
    pub planner_trace: Vec<RationaleEntry>,
    pub inventory: Vec<PlannerToolSpec>,
}

impl PlannerView {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("view serializes")
    }
}

/// Everything a run records, plus decoded media for live runs.
#[derive(Debug)]
pub struct EvidenceState {
    trace: RunTrace,
    audio: Vec<Option<StoredAudio>>,
    plot_png: Vec<Option<Arc<Vec<u8>>>>,
    decoder: Option<ExternalDecoder>,
}

impl EvidenceState {
    pub fn new(
        question_id: &str,
        question: &str,
        expected_format: ExpectedFormat,
        mode: RunMode,
        config_snapshot: ConfigSnapshot,
    ) -> Self {
        EvidenceState {
            trace: RunTrace {
                version: TRACE_VERSION,
                question_id: question_id.to_string(),
                question: question.to_string(),
                expected_format,
                mode,
                config_snapshot,
                artifacts: Vec::new(),
                plots: Vec::new(),
                evidence: Vec::new(),
                perception: None,
                plan: None,
                rounds: Vec::new(),
                summary_seq: None,
                answer_drafts: Vec::new(),
                best_effort: false,
                termination: None,
                outcome: None,
                fail_reason: None,
            },
            audio: Vec::new(),
            plot_png: Vec::new(),
            decoder: None,
        }
    }

    pub fn with_decoder(mut self, decoder: Option<ExternalDecoder>) -> Self {
        self.decoder = decoder;
        self
    }

    /// Rebuilds a state from a trace. Media is not loaded, so views and
    /// statistics work but tools and model calls do not.
    pub fn from_trace(trace: RunTrace) -> Self {
        EvidenceState {
            audio: trace.artifacts.iter().map(|_| None).collect(),
            plot_png: trace.plots.iter().map(|_| None).collect(),
            trace,
            decoder: None,
        }
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }

    pub fn question_id(&self) -> &str {
        &self.trace.question_id
    }

    pub fn artifacts(&self) -> &[AudioArtifact] {
        &self.trace.artifacts
    }

    pub fn artifact(&self, id: ArtifactId) -> Option<&AudioArtifact> {
        self.trace.artifacts.get(id.index())
    }

    pub fn next_artifact_id(&self) -> ArtifactId {
        ArtifactId(self.trace.artifacts.len() as u32)
    }

    pub fn evidence(&self) -> &[EvidenceItem] {
        &self.trace.evidence
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.trace.rounds
    }

    fn ensure_live(&self) -> Result<(), StateError> {
        if self.trace.outcome.is_some() {
            Err(StateError::Finished)
        } else {
            Ok(())
        }
    }

    /// Registers media as the next `audio_<n>`.
    pub fn register_artifact(
        &mut self,
        media: MediaInput,
        source: ArtifactSource,
        provenance: Option<Provenance>,
    ) -> Result<ArtifactId, StateError> {
        self.ensure_live()?;
        match (source, &provenance) {
            (ArtifactSource::Derived, Some(p)) => {
                if p.parent.index() >= self.trace.artifacts.len() {
                    return Err(StateError::UnknownParent(p.parent));
                }
            }
            (ArtifactSource::Derived, None) => {
                return Err(StateError::InvalidEvidence("derived artifact needs provenance".into()))
            }
            (ArtifactSource::Original, Some(_)) => {
                return Err(StateError::InvalidEvidence("original artifact cannot have provenance".into()))
            }
            (ArtifactSource::Original, None) => {}
        }
        let (decoded, format) =
            decode_media::<f64>(&media.bytes, media.file.as_deref(), self.decoder.as_ref())?;
        if decoded.is_empty() {
            return Err(StateError::Decode(DspError::EmptyAudio));
        }
        let id = self.next_artifact_id();
        self.trace.artifacts.push(AudioArtifact {
            id,
            source,
            provenance,
            media: MediaRef {
                path: media.path,
                sha256: sha256_hex(&media.bytes),
            },
            format,
            duration_s: decoded.duration_s(),
            sample_rate_hz: decoded.sample_rate(),
            channels: decoded.channel_count(),
        });
        self.audio.push(Some(StoredAudio {
            bytes: media.bytes,
            file: media.file,
            decoded: Arc::new(decoded),
        }));
        Ok(id)
    }

    /// Encodes derived audio as float WAV and registers it.
    pub fn register_derived(&mut self, audio: &Audio, provenance: Provenance) -> Result<ArtifactId, StateError> {
        let id = self.next_artifact_id();
        let bytes = encode_wav_f32(audio);
        let media = MediaInput {
            bytes: Arc::new(bytes),
            path: format!("media/{}/{id}.wav", self.trace.question_id),
            file: None,
        };
        self.register_artifact(media, ArtifactSource::Derived, Some(provenance))
    }

    pub fn register_plot(&mut self, parent: ArtifactId, tool: &str, image: PlotImage) -> Result<PlotId, StateError> {
        self.ensure_live()?;
        if parent.index() >= self.trace.artifacts.len() {
            return Err(StateError::UnknownParent(parent));
        }
        let id = PlotId(self.trace.plots.len() as u32);
        self.trace.plots.push(PlotArtifact {
            id,
            parent,
            kind: image.kind,
            tool: tool.to_string(),
            width: image.width,
            height: image.height,
            media: MediaRef::for_bytes(format!("media/{}/{id}.png", self.trace.question_id), &image.png),
        });
        self.plot_png.push(Some(Arc::new(image.png)));
        Ok(id)
    }

    pub fn append_evidence(&mut self, item: NewEvidence) -> Result<&EvidenceItem, StateError> {
        self.ensure_live()?;
        let named = item.tool_name.as_deref().is_some_and(|n| !n.is_empty());
        if (item.source == EvidenceSource::Tool) != named {
            return Err(StateError::InvalidEvidence(
                "tool evidence needs a tool name; other sources must not have one".into(),
            ));
        }
        if let Some(bad) = item
            .subject_artifact_ids
            .iter()
            .find(|id| id.index() >= self.trace.artifacts.len())
        {
            return Err(StateError::UnknownArtifact(*bad));
        }
        let seq = self.trace.evidence.len() as u64;
        self.trace.evidence.push(EvidenceItem {
            seq,
            source: item.source,
            tool_name: item.tool_name,
            subject_artifact_ids: item.subject_artifact_ids,
            payload: item.payload,
            boundary_note: item.boundary_note,
        });
        Ok(&self.trace.evidence[seq as usize])
    }

    fn stored(&self, id: ArtifactId) -> Result<&StoredAudio, StateError> {
        match self.audio.get(id.index()) {
            None => Err(StateError::UnknownArtifact(id)),
            Some(None) => Err(StateError::NoMedia(id)),
            Some(Some(s)) => Ok(s),
        }
    }

    pub fn decoded(&self, id: ArtifactId) -> Result<Arc<Audio>, StateError> {
        self.stored(id).map(|s| Arc::clone(&s.decoded))
    }

    pub fn media_bytes(&self, id: ArtifactId) -> Result<Arc<Vec<u8>>, StateError> {
        self.stored(id).map(|s| Arc::clone(&s.bytes))
    }

    pub fn media_file(&self, id: ArtifactId) -> Result<Option<PathBuf>, StateError> {
        self.stored(id).map(|s| s.file.clone())
    }

    pub fn audio_inputs(&self, ids: &[ArtifactId]) -> Result<Vec<AudioInput>, StateError> {
        ids.iter()
            .map(|&id| {
                Ok(AudioInput {
                    artifact_id: id,
                    wav: self.media_bytes(id)?,
                })
            })
            .collect()
    }

    pub fn original_audio(&self) -> Result<OriginalAudio, StateError> {
        let ids: Vec<ArtifactId> = self
            .trace
            .artifacts
            .iter()
            .filter(|a| a.source == ArtifactSource::Original)
            .map(|a| a.id)
            .collect();
        Ok(OriginalAudio(self.audio_inputs(&ids)?))
    }

    /// Derived media and plots with their trace paths, for writing to disk.
    pub fn generated_media(&self) -> Vec<(String, Arc<Vec<u8>>)> {
        let audio = self
            .trace
            .artifacts
            .iter()
            .zip(&self.audio)
            .filter(|(a, _)| a.source == ArtifactSource::Derived)
            .filter_map(|(a, s)| s.as_ref().map(|s| (a.media.path.clone(), Arc::clone(&s.bytes))));
        let plots = self
            .trace
            .plots
            .iter()
            .zip(&self.plot_png)
            .filter_map(|(p, png)| png.as_ref().map(|png| (p.media.path.clone(), Arc::clone(png))));
        audio.chain(plots).collect()
    }

    pub fn plot_png(&self, id: PlotId) -> Option<(PlotKind, Arc<Vec<u8>>)> {
        let meta = self.trace.plots.get(id.index())?;
        let png = self.plot_png.get(id.index())?.as_ref()?;
        Some((meta.kind, Arc::clone(png)))
    }

    pub fn set_perception(&mut self, record: PerceptionRecord) -> Result<(), StateError> {
        self.ensure_live()?;
        if self.trace.perception.is_some() {
            return Err(StateError::AlreadySet("perception"));
        }
        self.trace.perception = Some(record);
        Ok(())
    }

    pub fn set_plan(&mut self, record: PlanRecord) -> Result<(), StateError> {
        self.ensure_live()?;
        if self.trace.plan.is_some() {
            return Err(StateError::AlreadySet("plan"));
        }
        self.trace.plan = Some(record);
        Ok(())
    }

    pub fn push_round(&mut self, round: RoundRecord) -> Result<(), StateError> {
        self.ensure_live()?;
        self.trace.rounds.push(round);
        Ok(())
    }

    pub fn set_summary(&mut self, seq: u64) -> Result<(), StateError> {
        self.ensure_live()?;
        if self.trace.summary_seq.is_some() {
            return Err(StateError::AlreadySet("summary"));
        }
        self.trace.summary_seq = Some(seq);
        Ok(())
    }

    pub fn push_draft(&mut self, draft: AnswerDraft) -> Result<(), StateError> {
        self.ensure_live()?;
        self.trace.answer_drafts.push(draft);
        Ok(())
    }

    pub fn finish(
        &mut self,
        termination: Termination,
        outcome: Outcome,
        best_effort: bool,
        fail_reason: Option<String>,
    ) -> Result<(), StateError> {
        self.ensure_live()?;
        self.trace.termination = Some(termination);
        self.trace.best_effort = best_effort;
        self.trace.fail_reason = fail_reason;
        self.trace.outcome = Some(outcome);
        Ok(())
    }

    /// Hash over artifacts, plots and evidence; equal before and after any
    /// operation that must leave the state untouched.
    pub fn content_digest(&self) -> String {
        let doc = json!({
            "artifacts": self.trace.artifacts,
            "plots": self.trace.plots,
            "evidence": self.trace.evidence,
        });
        sha256_hex(doc.to_string().as_bytes())
    }

    pub fn snapshot_for_planner(&self, inventory: &[PlannerToolSpec], evidence_char_cap: Option<usize>) -> PlannerView {
        let t = &self.trace;
        PlannerView {
            question: t.question.clone(),
            expected_format: t.expected_format.describe(),
            plan: t.plan.as_ref().map(|p| p.plan.clone()),
            artifacts: t
                .artifacts
                .iter()
                .map(|a| ArtifactView {
                    id: a.id,
                    source: a.source,
                    duration_s: a.duration_s,
                    sample_rate_hz: a.sample_rate_hz,
                    channels: a.channels,
                    provenance: a.provenance.clone(),
                })
                .collect(),
            evidence: t
                .evidence
                .iter()
                .map(|e| {
                    let mut e = e.clone();
                    if let Some(cap) = evidence_char_cap {
                        let text = e.payload.to_string();
                        if text.chars().count() > cap {
                            let preview: String = text.chars().take(cap).collect();
                            e.payload = json!({"truncated": true, "preview": preview});
                        }
                    }
                    e
                })
                .collect(),
            tool_calls: t.tool_calls().cloned().collect(),
            planner_trace: t
                .rounds
                .iter()
                .map(|r| RationaleEntry {
                    round: r.index,
                    kind: r.action.kind,
                    rationale: r.action.rationale.clone(),
                })
                .collect(),
            inventory: inventory.to_vec(),
        }
    }
}

/// Compact payload value for a decibel level; silence is reported as the
/// string `"-inf"` because JSON has no infinities.
pub fn db_value(db: f64) -> Value {
    if db.is_finite() {
        json!(db)
    } else if db < 0.0 {
        json!("-inf")
    } else {
        json!("+inf")
    }
}
