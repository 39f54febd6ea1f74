//! End-to-end runs against scripted backends, plus the rubric rule.

use std::sync::Arc;

use serde_json::json;

use hearsay_cli::rubric::{aggregate_rubric, rubric_score, RubricJudgment};
use hearsay_cli::Rational;
use hearsay_core::fixtures::{self, HOT_WATER_ANSWER, HOT_WATER_CAPTION};
use hearsay_core::planner::{resolve_option, PARSE_DEGRADED};
use hearsay_core::registry::RegistryConfig;
use hearsay_core::{
    export_trace, validate_trace, ActionKind, BatchOptions, Outcome, QuestionInput, Registry, RunConfig, RunMode, Runner,
    Script, ScriptedFailure, Templates, Termination, ToolCallStatus,
};
use hearsay_remote::{StubResponse, StubScript, StubServer};

fn runner(registry: Registry) -> Runner {
    Runner::new(RunConfig::default(), Arc::new(registry), Templates::default()).unwrap()
}

fn plan() -> serde_json::Value {
    json!({
        "clarified_intent": "Which pour is hot?",
        "focus_points": ["hiss"],
        "candidate_operations": [{"description": "measure", "candidate_tools": ["extract_rms_energy"]}]
    })
}

pub fn hot_water_fixture() {
    let r = runner(Registry::default_inventory());
    let q = fixtures::hot_water_question();
    let mut first: Option<(String, Vec<(String, Arc<Vec<u8>>)>)> = None;
    for rep in 0..5 {
        let (trace, media) = r.run_mode(&q, &fixtures::scripted(fixtures::hot_water_script()), RunMode::Agent);
        validate_trace(&trace).unwrap();
        let calls: Vec<_> = trace.tool_calls().collect();
        let names: Vec<&str> = calls.iter().map(|c| c.tool_name.as_str()).collect();
        assert_eq!(names, ["trim_audio", "trim_audio", "analyze_spectral_features"]);
        assert!(calls.iter().all(|c| c.status == ToolCallStatus::Ok));
        assert_eq!(trace.rounds[1].tool_calls.len(), 1, "spectral features run as one batched call");
        assert_eq!(trace.follow_up_count(), 1);
        assert_eq!(trace.outcome, Some(Outcome::Answered));
        let answer = trace.final_answer().unwrap();
        assert_eq!(answer, HOT_WATER_ANSWER);
        assert_eq!(resolve_option(answer, q.expected_format.options()), Some(1));
        let text = export_trace(&trace);
        match &first {
            None => first = Some((text, media)),
            Some((t0, m0)) => {
                assert!(*t0 == text, "repetition {rep} exported a different trace");
                assert!(*m0 == media, "repetition {rep} wrote different media");
            }
        }
    }
}

pub fn round_cap() {
    let mut script = Script::default().frontend(HOT_WATER_CAPTION).frontend("B").planner(plan());
    for _ in 0..100 {
        script = script.planner(json!({"kind": "call_tools", "rationale": "again", "calls": [
            {"tool": "extract_rms_energy", "params": {"audio_id": "audio_0"}}
        ]}));
    }
    let trace = runner(Registry::default_inventory()).run_question(&fixtures::hot_water_question(), &fixtures::scripted(script));
    validate_trace(&trace).unwrap();
    assert_eq!(trace.rounds.len(), 15);
    assert!(trace.rounds.iter().all(|r| r.action.kind == ActionKind::CallTools));
    assert_eq!(trace.termination, Some(Termination::RoundCap));
    assert!(trace.summary_seq.is_some(), "forced answer goes through the summary");
    assert_eq!(trace.outcome, Some(Outcome::Answered));
    assert_eq!(trace.final_answer(), Some("B"));
}

fn named(id: &str) -> QuestionInput {
    let mut q = fixtures::hot_water_question();
    q.id = id.into();
    q
}

pub fn robustness() {
    let server = StubServer::start(StubScript::default().with_tool(
        "transcribe_whisperx",
        StubResponse {
            delay_ms: 1000,
            ..StubResponse::ok(json!({"text": "too late"}))
        },
    ))
    .unwrap();
    let mut cfg = RegistryConfig::default_inventory().with_remote_base(server.base_url());
    for spec in &mut cfg.tools {
        if let Some(remote) = spec.remote.as_mut() {
            remote.timeout_s = 0.2;
        }
    }
    let r = runner(Registry::new(cfg, 4).unwrap());

    let questions: Vec<QuestionInput> = ["unknown_tool", "malformed", "timeout", "refused"].into_iter().map(named).collect();
    let provider = |q: &QuestionInput| {
        let base = Script::default().frontend(HOT_WATER_CAPTION).frontend("B").planner(plan());
        let script = match q.id.as_str() {
            "unknown_tool" => base
                .planner(json!({"kind": "call_tools", "rationale": "x", "calls": [
                    {"tool": "content", "params": {"audio_id": "audio_0"}},
                    {"tool": "extract_rms_energy", "params": {"audio_id": "audio_0"}}
                ]}))
                .planner(json!({"kind": "answer", "rationale": "done"})),
            "malformed" => base.planner("not json").planner("{oops").planner(json!({"kind": "dance", "rationale": "?"})),
            "timeout" => base
                .planner(json!({"kind": "call_tools", "rationale": "words", "calls": [
                    {"tool": "transcribe_whisperx", "params": {"audio_id": "audio_0"}}
                ]}))
                .planner(json!({"kind": "answer", "rationale": "done"})),
            _ => Script::default().frontend(ScriptedFailure::ContentSafety),
        };
        fixtures::scripted(script)
    };
    let items = r
        .run_batch(&questions, &provider, &BatchOptions { parallelism: 4, ..BatchOptions::default() })
        .unwrap();
    assert_eq!(items.len(), 4);
    let by_id = |id: &str| &items.iter().find(|i| i.question_id == id).unwrap().trace;
    for item in &items {
        validate_trace(&item.trace).unwrap();
    }

    let t = by_id("unknown_tool");
    let statuses: Vec<_> = t.tool_calls().map(|c| c.status).collect();
    assert_eq!(statuses, [ToolCallStatus::RejectedUnknownTool, ToolCallStatus::Ok]);
    assert_eq!(t.outcome, Some(Outcome::Answered));

    let t = by_id("malformed");
    assert_eq!(t.rounds.len(), 1);
    assert_eq!(t.rounds[0].repair_reasons.len(), 3);
    assert!(t.rounds[0].parse_degraded);
    assert_eq!(t.rounds[0].action.rationale, PARSE_DEGRADED);
    assert_eq!(t.outcome, Some(Outcome::Answered));

    let t = by_id("timeout");
    let call = t.tool_calls().next().unwrap();
    assert_eq!(call.status, ToolCallStatus::ExecutionError);
    assert!(call.diagnostics.contains("timeout"), "{}", call.diagnostics);
    assert_eq!(t.outcome, Some(Outcome::Answered));

    let failed: Vec<_> = items.iter().filter(|i| i.trace.outcome == Some(Outcome::Failed)).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].question_id, "refused");
    assert_eq!(failed[0].trace.termination, Some(Termination::BackendError));
}

pub fn rubric_exhaustive() {
    let mut judgments = Vec::new();
    for bits in 0u8..64 {
        let j = RubricJudgment {
            question_id: format!("q{bits}"),
            answer_correct: bits & 1 == 1,
            criteria: std::array::from_fn(|k| bits >> (k + 1) & 1 == 1),
        };
        let oracle = if bits & 1 == 1 {
            Rational::new((bits >> 1).count_ones() as i64, 5)
        } else {
            Rational::from_integer(0)
        };
        assert_eq!(rubric_score(&j), oracle, "bits {bits:06b}");
        judgments.push(j);
    }
    assert_eq!(aggregate_rubric(&judgments).mean, Some(Rational::new(1, 4)));
}
