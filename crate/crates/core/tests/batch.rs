use std::sync::Arc;

use hearsay_core::fixtures;
use hearsay_core::registry::RegistryConfig;
use hearsay_core::trace::ConfigSnapshot;
use hearsay_core::{
    export_trace, ArtifactId, ArtifactSource, BatchOptions, EvidenceState, MediaInput, Registry, RunConfig, RunMode,
    Runner, Script, Templates, ToolCall, ToolCallStatus,
};
use hearsay_remote::{StubResponse, StubScript, StubServer};
use proptest::prelude::*;
use serde_json::{json, Map, Value};

fn call(tool: &str, params: Value) -> ToolCall {
    ToolCall {
        tool: tool.into(),
        params: params.as_object().cloned().unwrap_or_else(Map::new),
    }
}

fn fresh_state(registry: &Registry) -> EvidenceState {
    let snapshot = ConfigSnapshot {
        run: RunConfig::default(),
        inventory: registry.names(),
        frontend_backend: "none".into(),
        planner_backend: "none".into(),
    };
    let mut state = EvidenceState::new("q", "what?", fixtures::hot_water_question().expected_format, RunMode::Agent, snapshot);
    state
        .register_artifact(
            MediaInput {
                bytes: Arc::new(fixtures::short_clip_wav(1)),
                path: "clip.wav".into(),
                file: None,
            },
            ArtifactSource::Original,
            None,
        )
        .unwrap();
    state
}

fn stub_registry(server: &StubServer, timeout_s: Option<f64>) -> Registry {
    let mut cfg = RegistryConfig::default_inventory().with_remote_base(server.base_url());
    if let Some(t) = timeout_s {
        for spec in &mut cfg.tools {
            if let Some(r) = spec.remote.as_mut() {
                r.timeout_s = t;
            }
        }
    }
    Registry::new(cfg, 4).unwrap()
}

const ASR: [&str; 3] = ["transcribe_whisperx", "transcribe_qwenasr", "transcribe_fireredasr"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn remote_batch_commits_in_call_order(delays in proptest::collection::vec(0u64..120, 3)) {
        let mut script = StubScript::default();
        for (tool, d) in ASR.iter().zip(&delays) {
            script = script.with_tool(tool, StubResponse { delay_ms: *d, ..StubResponse::ok(json!({"text": format!("from {tool}")})) });
        }
        let server = StubServer::start(script).unwrap();
        let registry = stub_registry(&server, None);
        let mut state = fresh_state(&registry);
        let calls: Vec<ToolCall> = ASR.iter().map(|t| call(t, json!({"audio_id": "audio_0"}))).collect();
        let records = registry.execute_batch(&mut state, 1, &calls).unwrap();
        for (i, (rec, tool)) in records.iter().zip(ASR).enumerate() {
            prop_assert_eq!(rec.status, ToolCallStatus::Ok, "{}", rec.diagnostics);
            prop_assert_eq!(&rec.tool_name, tool);
            prop_assert_eq!(rec.produced_evidence_seq, Some(i as u64));
            let e = &state.evidence()[i];
            prop_assert_eq!(e.payload["text"].as_str().unwrap(), format!("from {tool}"));
        }
    }
}

#[test]
fn remote_timeout_is_an_execution_error() {
    let server = StubServer::start(StubScript::default().with_tool(
        "transcribe_whisperx",
        StubResponse { delay_ms: 1500, ..StubResponse::ok(json!({"text": "late"})) },
    ))
    .unwrap();
    let registry = stub_registry(&server, Some(0.2));
    let mut state = fresh_state(&registry);
    let before = state.content_digest();
    let rec = registry.execute(&mut state, 1, &call("transcribe_whisperx", json!({"audio_id": "audio_0"})));
    assert_eq!(rec.status, ToolCallStatus::ExecutionError);
    assert!(rec.diagnostics.contains("timeout"), "{}", rec.diagnostics);
    assert_eq!(state.content_digest(), before);
}

#[test]
fn rejected_calls_leave_state_untouched() {
    let registry = Registry::default_inventory();
    let mut state = fresh_state(&registry);
    let before = state.content_digest();
    let bad = [
        (call("content", json!({"audio_id": "audio_0"})), ToolCallStatus::RejectedUnknownTool),
        (call("detect_energy_activity", json!({"audio_id": "audio_0"})), ToolCallStatus::RejectedUnknownTool),
        (call("trim_audio", json!({"audio_id": "audio_0", "start_s": 1.5})), ToolCallStatus::InvalidParams),
        (call("trim_audio", json!({"audio_id": "audio_0", "start_s": 1.5, "end_s": 0.5})), ToolCallStatus::InvalidParams),
        (call("extract_rms_energy", json!({"audio_id": "audio_9"})), ToolCallStatus::InvalidParams),
        (call("extract_rms_energy", json!({"audio_id": "audio_0", "extra": true})), ToolCallStatus::InvalidParams),
        (call("highpass_filter", json!({"audio_id": "audio_0", "cutoff_hz": 9000.0})), ToolCallStatus::InvalidParams),
    ];
    for (c, status) in &bad {
        let rec = registry.execute(&mut state, 1, c);
        assert_eq!(rec.status, *status, "{} {}", c.tool, rec.diagnostics);
        assert!(rec.produced_evidence_seq.is_none() && rec.produced_artifact_ids.is_empty());
        assert!(!rec.diagnostics.is_empty());
        assert_eq!(state.content_digest(), before);
    }
}

#[test]
fn calls_in_one_batch_cannot_consume_each_others_outputs() {
    let registry = Registry::default_inventory();
    let mut state = fresh_state(&registry);
    let calls = [
        call("trim_audio", json!({"audio_id": "audio_0", "start_s": 0.0, "end_s": 1.0})),
        call("extract_rms_energy", json!({"audio_id": "audio_1"})),
    ];
    let records = registry.execute_batch(&mut state, 1, &calls).unwrap();
    assert_eq!(records[0].status, ToolCallStatus::Ok);
    assert_eq!(records[0].produced_artifact_ids, vec![ArtifactId(1)]);
    assert_eq!(records[1].status, ToolCallStatus::InvalidParams);
    assert!(records[1].diagnostics.contains("independent"), "{}", records[1].diagnostics);

    // The next batch sees audio_1.
    let rec = registry.execute(&mut state, 2, &calls[1]);
    assert_eq!(rec.status, ToolCallStatus::Ok, "{}", rec.diagnostics);
    assert!(registry.execute_batch(&mut state, 3, &[]).is_err());
}

#[test]
fn derived_artifacts_carry_checked_params_and_parent() {
    let registry = Registry::default_inventory();
    let mut state = fresh_state(&registry);
    let rec = registry.execute(&mut state, 1, &call("highpass_filter", json!({"audio_id": "audio_0", "cutoff_hz": 500.0})));
    assert_eq!(rec.status, ToolCallStatus::Ok, "{}", rec.diagnostics);
    let a = state.artifact(ArtifactId(1)).unwrap();
    let p = a.provenance.as_ref().unwrap();
    assert_eq!(p.parent, ArtifactId(0));
    assert_eq!(p.tool, "highpass_filter");
    assert_eq!(p.params["order"], 4);
    assert!(!rec.params.contains_key("order"));
}

fn runner() -> Runner {
    Runner::new(RunConfig::default(), Arc::new(Registry::default_inventory()), Templates::default()).unwrap()
}

#[test]
fn parallel_batch_matches_serial() {
    let questions: Vec<_> = (0..8).map(fixtures::random_question).collect();
    let provider = |q: &hearsay_core::QuestionInput| {
        let seed: u64 = q.id.trim_start_matches("rand_").parse().unwrap();
        fixtures::scripted(fixtures::random_script(seed))
    };
    let r = runner();
    let serial = r.run_batch(&questions, &provider, &BatchOptions::default()).unwrap();
    let parallel = r
        .run_batch(&questions, &provider, &BatchOptions { parallelism: 4, ..BatchOptions::default() })
        .unwrap();
    assert_eq!(serial.len(), 8);
    for (a, b) in serial.iter().zip(&parallel) {
        assert_eq!(a.question_id, b.question_id);
        assert_eq!(export_trace(&a.trace), export_trace(&b.trace));
    }
}

#[test]
fn batch_writes_traces_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let q = fixtures::hot_water_question();
    let provider = |_: &hearsay_core::QuestionInput| fixtures::scripted(fixtures::hot_water_script());
    let r = runner();
    let opts = BatchOptions { out_dir: Some(dir.path().to_path_buf()), ..BatchOptions::default() };
    let first = r.run_batch(std::slice::from_ref(&q), &provider, &opts).unwrap();
    assert!(!first[0].skipped);
    let path = dir.path().join("hot_water.trace.json");
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, export_trace(&first[0].trace));
    assert!(dir.path().join("media/hot_water/audio_1.wav").exists());

    // A provider that would fail proves nothing is re-run.
    let empty = |_: &hearsay_core::QuestionInput| fixtures::scripted(Script::default());
    let again = r.run_batch(std::slice::from_ref(&q), &empty, &BatchOptions { resume: true, ..opts.clone() }).unwrap();
    assert!(again[0].skipped);
    assert_eq!(again[0].trace, first[0].trace);

    // A truncated trace is re-run.
    std::fs::write(&path, &written[..written.len() / 2]).unwrap();
    let rerun = r.run_batch(std::slice::from_ref(&q), &provider, &BatchOptions { resume: true, ..opts }).unwrap();
    assert!(!rerun[0].skipped);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), written);
}

#[test]
fn batch_rejects_bad_and_duplicate_ids() {
    let r = runner();
    let provider = |_: &hearsay_core::QuestionInput| fixtures::scripted(Script::default());
    let mut q = fixtures::hot_water_question();
    q.id = "../escape".into();
    assert!(r.run_batch(&[q], &provider, &BatchOptions::default()).is_err());
    let q = fixtures::hot_water_question();
    assert!(r.run_batch(&[q.clone(), q], &provider, &BatchOptions::default()).is_err());
}
