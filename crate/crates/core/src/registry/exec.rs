//! Validation, concurrent dispatch and in-order commit of tool calls.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde_json::{json, Map, Value};
use thiserror::Error;

use hearsay_dsp::plot::{render_plots, PlotImage, PlotKind};
use hearsay_dsp::wav::is_wav;
use hearsay_remote::{MediaPayload, RemoteCall, RemoteToolEndpoint};

use super::params::{validate_params, CheckedParams};
use super::{BackendKind, ParamKind, Registry, ToolSpec};
use crate::action::ToolCall;
use crate::artifact::Provenance;
use crate::ids::ArtifactId;
use crate::record::{EvidenceSource, NewEvidence, ToolCallRecord, ToolCallStatus};
use crate::state::EvidenceState;
use crate::tools::native::{run_native, DerivedAudio, NativeInput};
use crate::tools::ToolFailure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("a tool batch must contain at least one call")]
    EmptyBatch,
}

struct RemoteMedia {
    bytes: Arc<Vec<u8>>,
    file: Option<std::path::PathBuf>,
}

impl RemoteMedia {
    fn payload(&self) -> MediaPayload<'_> {
        MediaPayload {
            bytes: &self.bytes,
            mime: if is_wav(&self.bytes) { "audio/wav" } else { "application/octet-stream" },
            path: self.file.as_deref(),
        }
    }
}

enum Job {
    Native {
        implementation: String,
        inputs: Vec<NativeInput>,
    },
    Remote {
        endpoint: RemoteToolEndpoint,
        request_id: String,
        media: RemoteMedia,
        attachments: Vec<(String, RemoteMedia)>,
        params: Map<String, Value>,
        /// Audio to render plots from before the call, with the kinds asked for.
        plots: Option<(Arc<hearsay_dsp::Audio>, Vec<PlotKind>)>,
    },
}

struct Prepared<'a> {
    spec: &'a ToolSpec,
    checked: CheckedParams,
    job: Job,
}

enum Step<'a> {
    Done(ToolCallRecord),
    Run(Prepared<'a>),
}

#[derive(Default)]
struct Produced {
    evidence: Option<Value>,
    derived: Vec<DerivedAudio>,
    plots: Vec<PlotImage>,
}

struct RemoteJob<'a> {
    endpoint: &'a RemoteToolEndpoint,
    request_id: &'a str,
    media: &'a RemoteMedia,
    attachments: &'a [(String, RemoteMedia)],
    params: &'a Map<String, Value>,
    plots: &'a Option<(Arc<hearsay_dsp::Audio>, Vec<PlotKind>)>,
}

fn run_remote(client: &hearsay_remote::RemoteClient, spec: &ToolSpec, job: RemoteJob<'_>) -> Result<Produced, ToolFailure> {
    let images = match job.plots {
        Some((audio, kinds)) => render_plots(audio.as_ref(), kinds)?,
        None => Vec::new(),
    };
    let mut att: Vec<(String, MediaPayload<'_>)> = job.attachments.iter().map(|(n, m)| (n.clone(), m.payload())).collect();
    for img in &images {
        let kind = serde_json::to_value(img.kind).expect("plot kind serializes");
        att.push((
            kind.as_str().unwrap_or("plot").to_string(),
            MediaPayload {
                bytes: &img.png,
                mime: "image/png",
                path: None,
            },
        ));
    }
    let schema = spec
        .remote
        .as_ref()
        .map(|r| r.output_schema)
        .ok_or_else(|| ToolFailure::Execution("remote tool without settings".into()))?;
    let call = RemoteCall {
        request_id: job.request_id,
        media: job.media.payload(),
        attachments: &att,
        params: job.params,
    };
    let value = client
        .call(job.endpoint, schema, call)
        .map_err(|e| ToolFailure::Execution(e.to_string()))?;
    drop(att);
    Ok(Produced {
        evidence: Some(value),
        derived: Vec::new(),
        plots: images,
    })
}

fn run_prepared(registry: &Registry, p: &Prepared<'_>) -> Result<Produced, ToolFailure> {
    match &p.job {
        Job::Native { implementation, inputs } => {
            let out = run_native(implementation, &p.checked, inputs)?;
            Ok(Produced {
                evidence: out.evidence,
                derived: out.derived,
                plots: Vec::new(),
            })
        }
        Job::Remote {
            endpoint,
            request_id,
            media,
            attachments,
            params,
            plots,
        } => run_remote(
            &registry.client,
            p.spec,
            RemoteJob {
                endpoint,
                request_id,
                media,
                attachments,
                params,
                plots,
            },
        ),
    }
}

impl Registry {
    /// Executes a single call; equivalent to a batch of one.
    pub fn execute(&self, state: &mut EvidenceState, round: u32, call: &ToolCall) -> ToolCallRecord {
        self.execute_batch(state, round, std::slice::from_ref(call))
            .expect("batch of one is non-empty")
            .remove(0)
    }

    /// Runs a batch of independent calls. Calls are validated against the
    /// state as it was when the batch started, dispatched concurrently, and
    /// committed in request order.
    pub fn execute_batch(&self, state: &mut EvidenceState, round: u32, calls: &[ToolCall]) -> Result<Vec<ToolCallRecord>, RegistryError> {
        if calls.is_empty() {
            return Err(RegistryError::EmptyBatch);
        }
        let registered = state.artifacts().len();
        let steps: Vec<Step<'_>> = calls
            .iter()
            .enumerate()
            .map(|(i, call)| match self.prepare(state, round, i, call, registered) {
                Ok(p) => Step::Run(p),
                Err(rec) => Step::Done(rec),
            })
            .collect();

        let results = self.dispatch(&steps);

        let mut records = Vec::with_capacity(calls.len());
        for ((call, step), result) in calls.iter().zip(steps).zip(results) {
            let rec = match step {
                Step::Done(rec) => rec,
                Step::Run(p) => match result.expect("every prepared call has a result") {
                    Err(ToolFailure::InvalidParams(why)) => {
                        ToolCallRecord::failed(round, &call.tool, &call.params, ToolCallStatus::InvalidParams, why)
                    }
                    Err(ToolFailure::Execution(why)) => {
                        ToolCallRecord::failed(round, &call.tool, &call.params, ToolCallStatus::ExecutionError, why)
                    }
                    Ok(produced) => commit(state, round, call, &p, produced),
                },
            };
            records.push(rec);
        }
        Ok(records)
    }

    fn prepare<'a>(
        &'a self,
        state: &EvidenceState,
        round: u32,
        index: usize,
        call: &ToolCall,
        registered: usize,
    ) -> Result<Prepared<'a>, ToolCallRecord> {
        let fail = |status, why: String| ToolCallRecord::failed(round, &call.tool, &call.params, status, why);
        let spec = self.get(&call.tool).ok_or_else(|| {
            fail(
                ToolCallStatus::RejectedUnknownTool,
                format!("{:?} is not in the tool inventory", call.tool),
            )
        })?;
        let checked = validate_params(spec, &call.params, registered)
            .map_err(|e| fail(ToolCallStatus::InvalidParams, e.0))?;
        let exec_err = |e: crate::state::StateError| fail(ToolCallStatus::ExecutionError, e.to_string());
        let job = match spec.backend {
            BackendKind::Native => {
                let inputs = checked
                    .artifacts
                    .iter()
                    .map(|&id| {
                        Ok(NativeInput {
                            id,
                            audio: state.decoded(id)?,
                            format: state.artifact(id).map(|a| a.format.clone()).unwrap_or_default(),
                        })
                    })
                    .collect::<Result<Vec<_>, crate::state::StateError>>()
                    .map_err(exec_err)?;
                Job::Native {
                    implementation: spec.implementation().to_string(),
                    inputs,
                }
            }
            BackendKind::Remote => {
                let endpoint = self
                    .endpoint(spec)
                    .ok_or_else(|| fail(ToolCallStatus::ExecutionError, "remote tool without settings".into()))?;
                let media_of = |id: ArtifactId| -> Result<RemoteMedia, crate::state::StateError> {
                    Ok(RemoteMedia {
                        bytes: state.media_bytes(id)?,
                        file: state.media_file(id)?,
                    })
                };
                let mut artifact_params = spec
                    .params
                    .iter()
                    .filter(|p| matches!(p.kind, ParamKind::ArtifactId | ParamKind::ArtifactIdList));
                let primary_param = artifact_params.next().map(|p| p.name.clone()).unwrap_or_default();
                let primary = *checked
                    .artifacts
                    .first()
                    .ok_or_else(|| fail(ToolCallStatus::InvalidParams, "no audio argument".into()))?;
                let mut attachments = Vec::new();
                for p in artifact_params {
                    for (k, id) in checked.artifact_list(&p.name).into_iter().chain(checked.artifact(&p.name)).enumerate() {
                        let name = if k == 0 { p.name.clone() } else { format!("{}_{k}", p.name) };
                        attachments.push((name, media_of(id).map_err(exec_err)?));
                    }
                }
                let params: Map<String, Value> = checked
                    .values
                    .iter()
                    .filter(|(k, _)| **k != primary_param && !attachments.iter().any(|(n, _)| n == *k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                let render = spec.remote.as_ref().is_some_and(|r| r.render_plots);
                let plots = if render {
                    let mut kinds = Vec::new();
                    for s in checked.strings("kinds") {
                        let k: PlotKind = serde_json::from_value(json!(s))
                            .map_err(|_| fail(ToolCallStatus::InvalidParams, format!("unknown plot kind {s}")))?;
                        kinds.push(k);
                    }
                    if kinds.is_empty() {
                        kinds = vec![PlotKind::Waveform, PlotKind::Spectrogram];
                    }
                    Some((state.decoded(primary).map_err(exec_err)?, kinds))
                } else {
                    None
                };
                Job::Remote {
                    endpoint,
                    request_id: format!("{}-r{round}-c{index}", state.question_id()),
                    media: media_of(primary).map_err(exec_err)?,
                    attachments,
                    params,
                    plots,
                }
            }
        };
        Ok(Prepared { spec, checked, job })
    }

    /// Runs prepared calls on at most `inflight_cap` worker threads.
    fn dispatch(&self, steps: &[Step<'_>]) -> Vec<Option<Result<Produced, ToolFailure>>> {
        let jobs: Vec<(usize, &Prepared<'_>)> = steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Step::Run(p) => Some((i, p)),
                Step::Done(_) => None,
            })
            .collect();
        let slots: Vec<Mutex<Option<Result<Produced, ToolFailure>>>> = steps.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.client.inflight_cap().max(1).min(jobs.len());
        if workers <= 1 {
            for (i, p) in &jobs {
                *slots[*i].lock().expect("slot lock") = Some(run_prepared(self, p));
            }
        } else {
            let next = AtomicUsize::new(0);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let k = next.fetch_add(1, Ordering::SeqCst);
                        let Some((i, p)) = jobs.get(k) else { break };
                        let r = run_prepared(self, p);
                        *slots[*i].lock().expect("slot lock") = Some(r);
                    });
                }
            });
        }
        slots.into_iter().map(|m| m.into_inner().expect("slot lock")).collect()
    }
}

fn dedup(ids: impl IntoIterator<Item = ArtifactId>) -> Vec<ArtifactId> {
    let mut out: Vec<ArtifactId> = Vec::new();
    for id in ids {
        if !out.contains(&id) {
            out.push(id);
        }
    }
    out
}

fn commit(state: &mut EvidenceState, round: u32, call: &ToolCall, p: &Prepared<'_>, produced: Produced) -> ToolCallRecord {
    let spec = p.spec;
    let fail = |why: String| ToolCallRecord::failed(round, &call.tool, &call.params, ToolCallStatus::ExecutionError, why);
    let primary = p.checked.artifacts.first().copied();
    let mut plot_ids = Vec::new();
    for img in produced.plots {
        match primary.map(|parent| state.register_plot(parent, &spec.name, img)) {
            Some(Ok(id)) => plot_ids.push(id),
            Some(Err(e)) => return fail(e.to_string()),
            None => return fail("plot without a parent artifact".into()),
        }
    }
    let mut artifact_ids = Vec::new();
    for d in produced.derived {
        let prov = Provenance {
            parent: d.parent,
            tool: spec.name.clone(),
            params: p.checked.values.clone(),
            output: d.output,
        };
        match state.register_derived(&d.audio, prov) {
            Ok(id) => artifact_ids.push(id),
            Err(e) => return fail(e.to_string()),
        }
    }
    let mut evidence_seq = None;
    if let Some(mut payload) = produced.evidence {
        if let Value::Object(map) = &mut payload {
            if !artifact_ids.is_empty() {
                map.insert("derived_audio_ids".into(), json!(artifact_ids));
            }
            if !plot_ids.is_empty() {
                map.insert("plot_ids".into(), json!(plot_ids));
            }
        }
        let item = NewEvidence {
            source: EvidenceSource::Tool,
            tool_name: Some(spec.name.clone()),
            subject_artifact_ids: dedup(p.checked.artifacts.iter().copied().chain(artifact_ids.iter().copied())),
            payload,
            boundary_note: Some(spec.boundary.clone()),
        };
        match state.append_evidence(item) {
            Ok(e) => evidence_seq = Some(e.seq),
            Err(e) => return fail(e.to_string()),
        }
    }
    if evidence_seq.is_none() && artifact_ids.is_empty() {
        return fail("tool produced neither evidence nor audio".into());
    }
    ToolCallRecord {
        round,
        tool_name: call.tool.clone(),
        params: call.params.clone(),
        status: ToolCallStatus::Ok,
        produced_evidence_seq: evidence_seq,
        produced_artifact_ids: artifact_ids,
        diagnostics: String::new(),
    }
}
