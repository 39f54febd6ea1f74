//! Drives questions through perception, planning, evidence acquisition and
//! answering, and writes their traces.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

use hearsay_dsp::wav::ExternalDecoder;

use crate::action::ActionKind;
use crate::artifact::ArtifactSource;
use crate::backend::{BackendError, Backends, ModelBackend, ModelRequest};
use crate::config::{CapBehavior, ConfigError, RunConfig};
use crate::frontend::{self, direct_answer_request, final_answer_request, FrontendError};
use crate::planner::{self, build_perception_prompt, build_plan, decide_action, summarize_evidence, validate_format, DecideParams, ExpectedFormat, PlannerError};
use crate::record::{EvidenceSource, NewEvidence};
use crate::registry::Registry;
use crate::state::{EvidenceState, MediaInput, StateError};
use crate::templates::{render, Templates};
use crate::trace::{
    export_trace, import_trace, AnswerDraft, ConfigSnapshot, Outcome, PerceptionRecord, PlanRecord, RoundRecord, RunMode,
    RunTrace, Termination,
};

/// One question ready to run.
#[derive(Debug, Clone)]
pub struct QuestionInput {
    pub id: String,
    pub question: String,
    pub expected_format: ExpectedFormat,
    pub audio: Vec<MediaInput>,
}

/// Supplies model backends per question. Scripted replay needs a fresh
/// script per question so that parallel runs stay independent.
pub trait BackendProvider: Send + Sync {
    fn backends_for(&self, question: &QuestionInput) -> Backends;
}

impl BackendProvider for Backends {
    fn backends_for(&self, _question: &QuestionInput) -> Backends {
        self.clone()
    }
}

impl<F> BackendProvider for F
where
    F: Fn(&QuestionInput) -> Backends + Send + Sync,
{
    fn backends_for(&self, question: &QuestionInput) -> Backends {
        self(question)
    }
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("template version {found:?} does not match configured {configured:?}")]
    TemplateVersion { found: String, configured: String },
    #[error("question id {0:?} is not usable as a file name")]
    BadQuestionId(String),
    #[error("duplicate question id {0:?}")]
    DuplicateQuestionId(String),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Run-scoped failure that ends a question with a failed outcome.
#[derive(Debug)]
enum Abort {
    Backend(BackendError),
    State(StateError),
}

impl From<BackendError> for Abort {
    fn from(e: BackendError) -> Self {
        Abort::Backend(e)
    }
}

impl From<StateError> for Abort {
    fn from(e: StateError) -> Self {
        Abort::State(e)
    }
}

impl From<FrontendError> for Abort {
    fn from(e: FrontendError) -> Self {
        match e {
            FrontendError::Backend(b) => Abort::Backend(b),
            other => Abort::Backend(BackendError::Other(other.to_string())),
        }
    }
}

impl From<PlannerError> for Abort {
    fn from(e: PlannerError) -> Self {
        match e {
            PlannerError::Backend(b) => Abort::Backend(b),
            other => Abort::Backend(BackendError::Other(other.to_string())),
        }
    }
}

pub fn valid_question_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.len() <= 200
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

pub fn trace_file_name(id: &str) -> String {
    format!("{id}.trace.json")
}

pub struct Runner {
    config: RunConfig,
    registry: Arc<Registry>,
    templates: Templates,
    decoder: Option<ExternalDecoder>,
}

impl Runner {
    pub fn new(config: RunConfig, registry: Arc<Registry>, templates: Templates) -> Result<Self, OrchestratorError> {
        config.validate()?;
        if templates.version != config.template_version {
            return Err(OrchestratorError::TemplateVersion {
                found: templates.version.clone(),
                configured: config.template_version.clone(),
            });
        }
        Ok(Runner {
            config,
            registry,
            templates,
            decoder: None,
        })
    }

    pub fn with_decoder(mut self, decoder: Option<ExternalDecoder>) -> Self {
        self.decoder = decoder;
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    fn new_state(&self, q: &QuestionInput, mode: RunMode, backends: &Backends) -> EvidenceState {
        let snapshot = ConfigSnapshot {
            run: self.config.clone(),
            inventory: self.registry.names(),
            frontend_backend: backends.frontend.label(),
            planner_backend: backends.planner.label(),
        };
        EvidenceState::new(&q.id, &q.question, q.expected_format.clone(), mode, snapshot).with_decoder(self.decoder.clone())
    }

    fn register_inputs(state: &mut EvidenceState, q: &QuestionInput) -> Result<(), String> {
        if q.audio.is_empty() {
            return Err("question has no audio input".into());
        }
        for m in &q.audio {
            state
                .register_artifact(m.clone(), ArtifactSource::Original, None)
                .map_err(|e| format!("{}: {e}", m.path))?;
        }
        Ok(())
    }

    /// Runs one question through the full agent graph. Per-question
    /// problems end in a failed outcome rather than an error.
    pub fn run_question(&self, q: &QuestionInput, backends: &Backends) -> RunTrace {
        self.run_mode(q, backends, RunMode::Agent).0
    }

    /// Frontend-only baseline: one answer call on the original audio.
    pub fn run_direct(&self, q: &QuestionInput, backends: &Backends) -> RunTrace {
        self.run_mode(q, backends, RunMode::Direct).0
    }

    /// Runs `q` and also returns generated media (derived audio and plots)
    /// keyed by trace-relative path.
    pub fn run_mode(&self, q: &QuestionInput, backends: &Backends, mode: RunMode) -> (RunTrace, Vec<(String, Arc<Vec<u8>>)>) {
        let mut state = self.new_state(q, mode, backends);
        if let Err(why) = Self::register_inputs(&mut state, q) {
            finish(&mut state, Termination::InputError, Outcome::Failed, false, Some(why));
            return (state.into_trace(), Vec::new());
        }
        let result = match mode {
            RunMode::Agent => self.agent(&mut state, backends),
            RunMode::Direct => self.direct(&mut state, backends),
        };
        if let Err(abort) = result {
            let reason = match abort {
                Abort::Backend(e) => e.to_string(),
                Abort::State(e) => format!("evidence state: {e}"),
            };
            finish(&mut state, Termination::BackendError, Outcome::Failed, false, Some(reason));
        }
        let media = state.generated_media();
        (state.into_trace(), media)
    }

    fn direct(&self, state: &mut EvidenceState, backends: &Backends) -> Result<(), Abort> {
        let req = direct_answer_request(
            &self.templates,
            self.config.model_temperature,
            state.original_audio()?,
            &state.trace().question,
            &state.trace().expected_format.describe(),
        );
        let best_effort = self.answer_with_retries(state, backends.frontend.as_ref(), req)?;
        finish(state, Termination::Direct, Outcome::Answered, best_effort, None);
        Ok(())
    }

    fn agent(&self, state: &mut EvidenceState, backends: &Backends) -> Result<(), Abort> {
        let started = Instant::now();
        let cfg = &self.config;
        let temp = cfg.model_temperature;
        let question = state.trace().question.clone();
        let expected = state.trace().expected_format.clone();

        let prompt = build_perception_prompt(&self.templates, &question, &expected)?;
        let originals = state.original_audio()?;
        let original_ids = originals.ids();
        let perception = frontend::perceive(backends.frontend.as_ref(), &self.templates, temp, originals.0, &prompt)?;
        let caption = NewEvidence::new(
            EvidenceSource::FrontendCaption,
            original_ids,
            serde_json::to_value(&perception.report).expect("report serializes"),
        );
        let seq = state.append_evidence(caption)?.seq;
        state.set_perception(PerceptionRecord {
            prompt,
            evidence_seq: seq,
            replies: perception.replies,
            degraded: perception.degraded,
        })?;

        let plan = build_plan(
            backends.planner.as_ref(),
            &self.templates,
            temp,
            &question,
            &expected,
            &perception.report,
            &self.registry.inventory_text(),
        )?;
        state.set_plan(PlanRecord {
            plan: plan.plan,
            replies: plan.replies,
            degraded: plan.degraded,
        })?;

        let inventory = self.registry.planner_inventory();
        let mut termination = Termination::RoundCap;
        for round in 1..=cfg.round_cap {
            if started.elapsed().as_secs_f64() > cfg.wall_clock_s {
                termination = Termination::WallClock;
                break;
            }
            let view = state.snapshot_for_planner(&inventory, cfg.evidence_char_cap);
            let decision = decide_action(
                backends.planner.as_ref(),
                &view,
                &DecideParams {
                    templates: &self.templates,
                    temperature: temp,
                    repair_budget: cfg.action_repair_budget,
                    round,
                    round_cap: cfg.round_cap,
                },
            )?;
            let mut record = RoundRecord {
                index: round,
                action: decision.action,
                replies: decision.replies,
                repair_reasons: decision.repair_reasons,
                parse_degraded: decision.parse_degraded,
                tool_calls: Vec::new(),
                follow_up_seq: None,
            };
            match record.action.kind {
                ActionKind::CallTools => {
                    record.tool_calls = self
                        .registry
                        .execute_batch(state, round, &record.action.calls)
                        .expect("parsed call_tools actions are non-empty");
                    state.push_round(record)?;
                }
                ActionKind::FollowUp => {
                    let req = record.action.follow_up_request.clone().expect("follow_up action has a request");
                    let result = state
                        .audio_inputs(&req.artifact_ids)
                        .map_err(Abort::from)
                        .and_then(|audio| {
                            frontend::follow_up(backends.frontend.as_ref(), &self.templates, temp, audio, &req.prompt)
                                .map_err(Abort::from)
                        });
                    match result {
                        Ok(report) => {
                            let item = NewEvidence::new(
                                EvidenceSource::FrontendFollowup,
                                report.subject_artifact_ids.clone(),
                                json!({"prompt_used": report.prompt_used, "observation": report.observation}),
                            );
                            record.follow_up_seq = Some(state.append_evidence(item)?.seq);
                            state.push_round(record)?;
                        }
                        Err(e) => {
                            state.push_round(record)?;
                            return Err(e);
                        }
                    }
                }
                ActionKind::Answer => {
                    state.push_round(record)?;
                    termination = Termination::Action;
                    break;
                }
                ActionKind::Fail => {
                    let reason = record.action.fail_reason.clone().unwrap_or_default();
                    state.push_round(record)?;
                    finish(state, Termination::Action, Outcome::Failed, false, Some(reason));
                    return Ok(());
                }
            }
        }

        if termination == Termination::RoundCap && cfg.at_round_cap == CapBehavior::Fail {
            finish(
                state,
                Termination::RoundCap,
                Outcome::Failed,
                false,
                Some(format!("round cap of {} reached without an answer", cfg.round_cap)),
            );
            return Ok(());
        }

        let view = state.snapshot_for_planner(&inventory, cfg.evidence_char_cap);
        let summary = summarize_evidence(&view);
        let summary_text = summary.payload["text"].as_str().unwrap_or_default().to_string();
        let seq = state.append_evidence(summary)?.seq;
        state.set_summary(seq)?;
        let req = final_answer_request(
            &self.templates,
            temp,
            state.original_audio()?,
            &question,
            &expected.describe(),
            &summary_text,
        );
        let best_effort = self.answer_with_retries(state, backends.frontend.as_ref(), req)?;
        finish(state, termination, Outcome::Answered, best_effort, None);
        Ok(())
    }

    /// Generates drafts until one passes the format check or the retry budget
    /// is spent. Returns whether the last draft is a best-effort answer.
    fn answer_with_retries(&self, state: &mut EvidenceState, frontend: &dyn ModelBackend, mut req: ModelRequest) -> Result<bool, Abort> {
        let expected = state.trace().expected_format.clone();
        let mut retries = 0;
        loop {
            let text = frontend.complete(&req)?;
            let verdict = validate_format(&text, &expected);
            let valid = verdict.valid;
            let feedback = verdict.structural_feedback.clone().unwrap_or_default();
            state.push_draft(AnswerDraft {
                text: text.clone(),
                verdict,
            })?;
            if valid {
                return Ok(false);
            }
            if retries >= self.config.format_retry_budget {
                return Ok(true);
            }
            retries += 1;
            req.push_exchange(&text, render(&self.templates.answer_retry, &[("feedback", &feedback)]));
        }
    }

    /// Runs a dataset with per-question isolation. With an output directory,
    /// each trace is written as soon as its run ends, so an interrupted batch
    /// can resume by skipping existing traces.
    pub fn run_batch(
        &self,
        questions: &[QuestionInput],
        provider: &dyn BackendProvider,
        options: &BatchOptions,
    ) -> Result<Vec<BatchItem>, OrchestratorError> {
        let mut seen = BTreeSet::new();
        for q in questions {
            if !valid_question_id(&q.id) {
                return Err(OrchestratorError::BadQuestionId(q.id.clone()));
            }
            if !seen.insert(q.id.as_str()) {
                return Err(OrchestratorError::DuplicateQuestionId(q.id.clone()));
            }
        }
        if let Some(dir) = &options.out_dir {
            std::fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
        }
        let slots: Vec<Mutex<Option<Result<BatchItem, OrchestratorError>>>> = questions.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let work = || loop {
            let i = next.fetch_add(1, Ordering::SeqCst);
            let Some(q) = questions.get(i) else { break };
            let item = self.batch_one(q, provider, options);
            *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(item);
        };
        let workers = options.parallelism.max(1).min(questions.len().max(1));
        if workers == 1 {
            work();
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(&work);
                }
            });
        }
        slots
            .into_iter()
            .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every question ran"))
            .collect()
    }

    fn batch_one(&self, q: &QuestionInput, provider: &dyn BackendProvider, options: &BatchOptions) -> Result<BatchItem, OrchestratorError> {
        let path = options.out_dir.as_ref().map(|d| d.join(trace_file_name(&q.id)));
        if options.resume {
            if let Some(p) = &path {
                if let Ok(text) = std::fs::read_to_string(p) {
                    if let Ok(trace) = import_trace(&text) {
                        return Ok(BatchItem {
                            question_id: q.id.clone(),
                            skipped: true,
                            trace,
                        });
                    }
                }
            }
        }
        let backends = provider.backends_for(q);
        let (trace, media) = self.run_mode(q, &backends, options.mode);
        if let (Some(dir), Some(p)) = (&options.out_dir, &path) {
            for (rel, bytes) in media {
                let target = dir.join(rel);
                if let Some(parent) = target.parent() {
                    std::fs::create_dir_all(parent).map_err(|source| io_err(parent, source))?;
                }
                std::fs::write(&target, bytes.as_slice()).map_err(|source| io_err(&target, source))?;
            }
            let tmp = p.with_extension("json.partial");
            std::fs::write(&tmp, export_trace(&trace)).map_err(|source| io_err(&tmp, source))?;
            std::fs::rename(&tmp, p).map_err(|source| io_err(p, source))?;
        }
        Ok(BatchItem {
            question_id: q.id.clone(),
            skipped: false,
            trace,
        })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> OrchestratorError {
    OrchestratorError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn finish(state: &mut EvidenceState, termination: Termination, outcome: Outcome, best_effort: bool, reason: Option<String>) {
    // Only fails when the run already finished, which the control flow rules out.
    let _ = state.finish(termination, outcome, best_effort, reason);
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub parallelism: usize,
    pub out_dir: Option<PathBuf>,
    pub resume: bool,
    pub mode: RunMode,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            parallelism: 1,
            out_dir: None,
            resume: false,
            mode: RunMode::Agent,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchItem {
    pub question_id: String,
    /// Loaded from an existing trace file instead of running.
    pub skipped: bool,
    pub trace: RunTrace,
}

pub use planner::EMPTY_SUMMARY_MARKER;
