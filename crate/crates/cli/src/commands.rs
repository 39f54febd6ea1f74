//! Subcommand bodies. Each returns the text to print on success.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hearsay_core::{BatchOptions, Outcome, RunMode};

use crate::config::HarnessConfig;
use crate::dataset::load_dataset;
use crate::scoring::{score_multiple_choice, VerdictFile};
use crate::stratify::{self, stratify_by_tool_calls};
use crate::traces::load_traces;
use crate::{audit, rounding, rubric, stats, HarnessError};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub dataset: PathBuf,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub parallel: usize,
    pub lenient: bool,
    pub resume: bool,
    pub direct: bool,
}

pub fn run(args: &RunArgs) -> Result<String, HarnessError> {
    let cfg = HarnessConfig::load(&args.config)?;
    let runner = cfg.runner()?;
    let data = load_dataset(&args.dataset, args.lenient)?;
    let base = args.dataset.parent().unwrap_or(Path::new("."));
    let questions: Vec<_> = data.records.iter().map(|r| r.to_input(base)).collect();
    let provider = |q: &hearsay_core::QuestionInput| cfg.backends_for(q);
    let opts = BatchOptions {
        parallelism: args.parallel.max(1),
        out_dir: Some(args.out_dir.clone()),
        resume: args.resume,
        mode: if args.direct { RunMode::Direct } else { RunMode::Agent },
    };
    let items = runner
        .run_batch(&questions, &provider, &opts)
        .map_err(|e| HarnessError::Validation(e.to_string()))?;
    let mut out = String::new();
    for issue in &data.skipped {
        out.push_str(&format!("skipped {issue}\n"));
    }
    let answered = items.iter().filter(|i| i.trace.outcome == Some(Outcome::Answered)).count();
    let skipped = items.iter().filter(|i| i.skipped).count();
    for i in items.iter().filter(|i| i.trace.outcome != Some(Outcome::Answered)) {
        out.push_str(&format!(
            "failed {}: {}\n",
            i.question_id,
            i.trace.fail_reason.as_deref().unwrap_or("unfinished")
        ));
    }
    out.push_str(&format!(
        "{} questions, {answered} answered, {} failed, {skipped} resumed from existing traces\n",
        items.len(),
        items.len() - answered
    ));
    Ok(out)
}

pub fn score(traces_dir: &Path, dataset_path: &Path, out: Option<&Path>) -> Result<String, HarnessError> {
    let traces = load_traces(traces_dir)?;
    let data = load_dataset(dataset_path, false)?;
    let report = score_multiple_choice(&traces, &data.records);
    let file = report.to_file();
    if let Some(p) = out {
        std::fs::write(p, to_json(&file)).map_err(io_err(p))?;
    }
    Ok(format!(
        "accuracy: {}% ({}/{})\n",
        report
            .accuracy()
            .map_or_else(|| "-".to_string(), |a| rounding::fmt_fixed(a * rounding::Rational::from_integer(100), 1)),
        report.correct,
        report.n()
    ))
}

pub fn stratify(traces_dir: &Path, dataset_path: &Path, baseline: &Path, json: bool) -> Result<String, HarnessError> {
    let traces = load_traces(traces_dir)?;
    let data = load_dataset(dataset_path, false)?;
    let text = std::fs::read_to_string(baseline).map_err(io_err(baseline))?;
    let base: VerdictFile = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Validation(format!("{}: {e}", baseline.display())))?;
    let base: BTreeMap<String, bool> = base.verdicts.into_iter().map(|v| (v.question_id, v.correct)).collect();
    let joined = stratify::join_outcomes(&traces, &data.records, &base).map_err(HarnessError::Validation)?;
    let rows = stratify_by_tool_calls(&joined.outcomes);
    if json {
        return Ok(to_json(&stratify::report(&rows)));
    }
    let mut out = stratify::render_table(&rows);
    if !joined.excluded_unfinished.is_empty() {
        out.push_str(&format!("excluded (no answer): {}\n", joined.excluded_unfinished.join(", ")));
    }
    Ok(out)
}

pub fn stats(traces_dir: &Path, json: bool) -> Result<String, HarnessError> {
    let s = stats::compute_behavior_stats(&load_traces(traces_dir)?);
    Ok(if json { to_json(&s.report()) } else { s.render() })
}

pub fn rubric(judgments: &Path, json: bool) -> Result<String, HarnessError> {
    let r = rubric::aggregate_rubric(&rubric::load_judgments(judgments)?);
    let fmt = |x: rounding::Rational| rounding::fmt_fixed(x, 3);
    if json {
        let per: Vec<_> = r
            .per_question
            .iter()
            .map(|(id, s)| serde_json::json!({"question_id": id, "score": rounding::to_f64(*s, 3)}))
            .collect();
        return Ok(to_json(&serde_json::json!({
            "n": r.per_question.len(),
            "mean": r.mean.map(|m| rounding::to_f64(m, 3)),
            "per_question": per,
        })));
    }
    let mut out = String::new();
    for (id, s) in &r.per_question {
        out.push_str(&format!("{id}\t{}\n", fmt(*s)));
    }
    out.push_str(&format!("mean\t{}\n", r.mean.map_or_else(|| "-".to_string(), fmt)));
    Ok(out)
}

pub fn audit(traces_dir: &Path, out_dir: &Path) -> Result<String, HarnessError> {
    let traces = load_traces(traces_dir)?;
    audit::export_audit_bundle(&traces, out_dir).map_err(io_err(out_dir))?;
    Ok(format!("{} traces exported to {}\n", traces.len(), out_dir.display()))
}
