//! Audit bundles: trace copies, an index and a readable timeline per run.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use hearsay_core::orchestrator::trace_file_name;
use hearsay_core::{export_trace, ActionKind, RunTrace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEntry {
    pub question_id: String,
    pub trace: String,
    pub timeline: String,
    pub mode: String,
    pub outcome: Option<String>,
    pub termination: Option<String>,
    pub rounds: usize,
    pub tool_calls: usize,
    pub relistens: usize,
    pub final_answer: Option<String>,
}

fn tag<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn timeline(t: &RunTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "question {}: {}", t.question_id, one_line(&t.question));
    let _ = writeln!(out, "expected: {}", one_line(&t.expected_format.describe()));
    for a in &t.artifacts {
        match &a.provenance {
            None => {
                let _ = writeln!(out, "artifact {} original {} ({:.3} s)", a.id, a.media.path, a.duration_s);
            }
            Some(p) => {
                let _ = writeln!(
                    out,
                    "artifact {} from {} via {} {} ({:.3} s)",
                    a.id,
                    p.parent,
                    p.tool,
                    serde_json::Value::Object(p.params.clone()),
                    a.duration_s
                );
            }
        }
    }
    if let Some(p) = &t.perception {
        if let Some(e) = t.evidence.get(p.evidence_seq as usize) {
            let _ = writeln!(out, "[{}] caption: {}", e.seq, e.payload);
        }
    }
    if let Some(p) = &t.plan {
        let _ = writeln!(out, "plan: {}", one_line(&p.plan.clarified_intent));
    }
    for r in &t.rounds {
        let _ = writeln!(out, "round {} {}: {}", r.index, r.action.kind.as_str(), one_line(&r.action.rationale));
        for reason in &r.repair_reasons {
            let _ = writeln!(out, "  repaired: {reason}");
        }
        for c in &r.tool_calls {
            let produced: Vec<String> = c.produced_artifact_ids.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "  call {} {} -> {}{}{}",
                c.tool_name,
                serde_json::Value::Object(c.params.clone()),
                tag(&c.status),
                c.produced_evidence_seq.map(|s| format!(" evidence [{s}]")).unwrap_or_default(),
                if produced.is_empty() { String::new() } else { format!(" artifacts {}", produced.join(",")) },
            );
            if !c.diagnostics.is_empty() {
                let _ = writeln!(out, "    {}", one_line(&c.diagnostics));
            }
        }
        if r.action.kind == ActionKind::FollowUp {
            if let Some(e) = r.follow_up_seq.and_then(|s| t.evidence.get(s as usize)) {
                let _ = writeln!(out, "  [{}] re-listen: {}", e.seq, one_line(e.payload["observation"].as_str().unwrap_or_default()));
            }
        }
    }
    if let Some(e) = t.summary_seq.and_then(|s| t.evidence.get(s as usize)) {
        let _ = writeln!(out, "[{}] summary:\n{}", e.seq, e.payload["text"].as_str().unwrap_or_default());
    }
    for (i, d) in t.answer_drafts.iter().enumerate() {
        let verdict = if d.verdict.valid { "valid".to_string() } else { format!("invalid: {}", d.verdict.structural_feedback.as_deref().unwrap_or_default()) };
        let _ = writeln!(out, "draft {}: {} ({verdict})", i + 1, one_line(&d.text));
    }
    let _ = writeln!(
        out,
        "outcome: {} via {}{}{}",
        t.outcome.as_ref().map(tag).unwrap_or_else(|| "unfinished".into()),
        t.termination.as_ref().map(tag).unwrap_or_else(|| "-".into()),
        if t.best_effort { ", best effort" } else { "" },
        t.fail_reason.as_deref().map(|r| format!(" ({})", one_line(r))).unwrap_or_default(),
    );
    out
}

/// Writes `traces/`, `timelines/` and `index.json` under `out_dir`. Output
/// depends only on the traces, so re-exporting yields identical bytes.
pub fn export_audit_bundle(traces: &[RunTrace], out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let trace_dir = out_dir.join("traces");
    let timeline_dir = out_dir.join("timelines");
    std::fs::create_dir_all(&trace_dir)?;
    std::fs::create_dir_all(&timeline_dir)?;
    let mut sorted: Vec<&RunTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    let mut written = Vec::new();
    let mut index = Vec::new();
    for t in sorted {
        let trace_rel = format!("traces/{}", trace_file_name(&t.question_id));
        let timeline_rel = format!("timelines/{}.txt", t.question_id);
        std::fs::write(out_dir.join(&trace_rel), export_trace(t))?;
        std::fs::write(out_dir.join(&timeline_rel), timeline(t))?;
        written.push(out_dir.join(&trace_rel));
        written.push(out_dir.join(&timeline_rel));
        index.push(IndexEntry {
            question_id: t.question_id.clone(),
            trace: trace_rel,
            timeline: timeline_rel,
            mode: tag(&t.mode),
            outcome: t.outcome.as_ref().map(tag),
            termination: t.termination.as_ref().map(tag),
            rounds: t.rounds.len(),
            tool_calls: t.tool_calls().count(),
            relistens: t.follow_up_count(),
            final_answer: t.final_answer().map(str::to_string),
        });
    }
    let index_path = out_dir.join("index.json");
    let mut text = serde_json::to_string_pretty(&index).expect("index serializes");
    text.push('\n');
    std::fs::write(&index_path, text)?;
    written.push(index_path);
    Ok(written)
}
