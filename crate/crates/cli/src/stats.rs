//! Behavioral statistics over a directory of traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;

use hearsay_core::{Outcome, RunTrace, ToolCallStatus};

use crate::rounding::{self, Rational};

pub const ROUND_BUCKETS: [&str; 6] = ["1", "2", "3", "4-5", "6-10", ">10"];

pub fn round_bucket(rounds: usize) -> &'static str {
    match rounds {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        4..=5 => "4-5",
        6..=10 => "6-10",
        _ => ">10",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolRow {
    pub tool: String,
    pub calls: usize,
    /// Questions calling the tool at least once.
    pub questions: usize,
}

/// Exact counts. Run-level shares use all runs; everything about rounds,
/// tools and re-listening uses completed (answered) runs only, so a run cut
/// short by a backend rejection does not dilute behavior statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorStats {
    pub n_runs: usize,
    pub n_completed: usize,
    pub total_rounds: usize,
    pub total_tool_calls: usize,
    pub zero_tool_questions: usize,
    pub one_round_questions: usize,
    pub rounds_histogram: Vec<(&'static str, usize)>,
    /// Sorted by calls descending, then name.
    pub tool_frequency: Vec<ToolRow>,
    pub relisten_questions: usize,
    pub relisten_total: usize,
    pub unknown_tool_calls: usize,
    pub unknown_tool_questions: usize,
}

pub fn compute_behavior_stats(traces: &[RunTrace]) -> BehaviorStats {
    let completed: Vec<&RunTrace> = traces.iter().filter(|t| t.outcome == Some(Outcome::Answered)).collect();
    let mut hist: BTreeMap<&str, usize> = ROUND_BUCKETS.iter().map(|b| (*b, 0)).collect();
    let mut calls: BTreeMap<&str, (usize, BTreeSet<&str>)> = BTreeMap::new();
    let mut s = BehaviorStats {
        n_runs: traces.len(),
        n_completed: completed.len(),
        total_rounds: 0,
        total_tool_calls: 0,
        zero_tool_questions: 0,
        one_round_questions: 0,
        rounds_histogram: Vec::new(),
        tool_frequency: Vec::new(),
        relisten_questions: 0,
        relisten_total: 0,
        unknown_tool_calls: 0,
        unknown_tool_questions: 0,
    };
    for t in &completed {
        let rounds = t.rounds.len();
        s.total_rounds += rounds;
        *hist.get_mut(round_bucket(rounds)).expect("bucket exists") += 1;
        if rounds <= 1 {
            s.one_round_questions += 1;
        }
        let mut n_calls = 0;
        let mut unknown = 0;
        for c in t.tool_calls() {
            n_calls += 1;
            let e = calls.entry(c.tool_name.as_str()).or_default();
            e.0 += 1;
            e.1.insert(t.question_id.as_str());
            if c.status == ToolCallStatus::RejectedUnknownTool {
                unknown += 1;
            }
        }
        s.total_tool_calls += n_calls;
        if n_calls == 0 {
            s.zero_tool_questions += 1;
        }
        s.unknown_tool_calls += unknown;
        if unknown > 0 {
            s.unknown_tool_questions += 1;
        }
        let relistens = t.follow_up_count();
        s.relisten_total += relistens;
        if relistens > 0 {
            s.relisten_questions += 1;
        }
    }
    s.rounds_histogram = ROUND_BUCKETS.iter().map(|b| (*b, hist[b])).collect();
    let mut rows: Vec<ToolRow> = calls
        .into_iter()
        .map(|(tool, (n, qs))| ToolRow {
            tool: tool.to_string(),
            calls: n,
            questions: qs.len(),
        })
        .collect();
    rows.sort_by(|a, b| b.calls.cmp(&a.calls).then_with(|| a.tool.cmp(&b.tool)));
    s.tool_frequency = rows;
    s
}

impl BehaviorStats {
    fn over_completed(&self, num: usize) -> Option<Rational> {
        rounding::ratio(num as i64, self.n_completed as i64)
    }

    pub fn mean_rounds(&self) -> Option<Rational> {
        self.over_completed(self.total_rounds)
    }

    pub fn mean_tool_calls(&self) -> Option<Rational> {
        self.over_completed(self.total_tool_calls)
    }

    pub fn zero_tool_share(&self) -> Option<Rational> {
        self.over_completed(self.zero_tool_questions)
    }

    pub fn one_round_share(&self) -> Option<Rational> {
        self.over_completed(self.one_round_questions)
    }

    pub fn relisten_share(&self) -> Option<Rational> {
        self.over_completed(self.relisten_questions)
    }

    pub fn answered_share(&self) -> Option<Rational> {
        rounding::ratio(self.n_completed as i64, self.n_runs as i64)
    }

    /// Share of all calls going to `row`, as a percentage.
    pub fn call_pct(&self, row: &ToolRow) -> Option<Rational> {
        rounding::percent(row.calls as i64, self.total_tool_calls as i64)
    }

    pub fn question_pct(&self, row: &ToolRow) -> Option<Rational> {
        rounding::percent(row.questions as i64, self.n_completed as i64)
    }

    pub fn report(&self) -> StatsReport {
        let pct = |x: Option<Rational>| x.map(|r| rounding::to_f64(r * Rational::from_integer(100), 1));
        StatsReport {
            n_runs: self.n_runs,
            n_completed: self.n_completed,
            mean_rounds: self.mean_rounds().map(|r| rounding::to_f64(r, 2)),
            mean_tool_calls: self.mean_tool_calls().map(|r| rounding::to_f64(r, 2)),
            total_tool_calls: self.total_tool_calls,
            zero_tool_pct: pct(self.zero_tool_share()),
            one_round_pct: pct(self.one_round_share()),
            answered_pct: pct(self.answered_share()),
            rounds_histogram: self
                .rounds_histogram
                .iter()
                .map(|(b, n)| HistRow {
                    rounds: b,
                    count: *n,
                    pct: rounding::percent(*n as i64, self.n_completed as i64).map(|p| rounding::to_f64(p, 1)),
                })
                .collect(),
            tool_frequency: self
                .tool_frequency
                .iter()
                .map(|r| ToolReport {
                    tool: r.tool.clone(),
                    calls: r.calls,
                    pct_of_calls: self.call_pct(r).map(|p| rounding::to_f64(p, 1)),
                    question_pct: self.question_pct(r).map(|p| rounding::to_f64(p, 1)),
                })
                .collect(),
            relisten_questions: self.relisten_questions,
            relisten_pct: pct(self.relisten_share()),
            relisten_total: self.relisten_total,
            unknown_tool_calls: self.unknown_tool_calls,
            unknown_tool_questions: self.unknown_tool_questions,
        }
    }

    pub fn render(&self) -> String {
        let r = self.report();
        let f = |x: Option<f64>, d: usize| x.map_or_else(|| "-".to_string(), |v| format!("{v:.d$}"));
        let mut out = String::new();
        let _ = writeln!(out, "runs: {} ({} completed, {}% answered)", r.n_runs, r.n_completed, f(r.answered_pct, 1));
        let _ = writeln!(out, "mean rounds: {}", f(r.mean_rounds, 2));
        let _ = writeln!(out, "mean tool calls: {} ({} total)", f(r.mean_tool_calls, 2), r.total_tool_calls);
        let _ = writeln!(out, "zero-tool exits: {}%", f(r.zero_tool_pct, 1));
        let _ = writeln!(out, "single-round exits: {}%", f(r.one_round_pct, 1));
        let _ = writeln!(
            out,
            "re-listening: {} questions ({}%), {} total",
            r.relisten_questions,
            f(r.relisten_pct, 1),
            r.relisten_total
        );
        let _ = writeln!(out, "unknown tools: {} calls in {} questions", r.unknown_tool_calls, r.unknown_tool_questions);
        let _ = writeln!(out, "\nrounds    count   share");
        for h in &r.rounds_histogram {
            let _ = writeln!(out, "{:<8} {:>6} {:>6}%", h.rounds, h.count, f(h.pct, 1));
        }
        let _ = writeln!(out, "\n{:<40} {:>6} {:>7} {:>7}", "tool", "calls", "%calls", "%quest");
        for t in &r.tool_frequency {
            let _ = writeln!(out, "{:<40} {:>6} {:>7} {:>7}", t.tool, t.calls, f(t.pct_of_calls, 1), f(t.question_pct, 1));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistRow {
    pub rounds: &'static str,
    pub count: usize,
    pub pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolReport {
    pub tool: String,
    pub calls: usize,
    pub pct_of_calls: Option<f64>,
    pub question_pct: Option<f64>,
}

/// Rounded, machine-readable form of [`BehaviorStats`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n_runs: usize,
    pub n_completed: usize,
    pub mean_rounds: Option<f64>,
    pub mean_tool_calls: Option<f64>,
    pub total_tool_calls: usize,
    pub zero_tool_pct: Option<f64>,
    pub one_round_pct: Option<f64>,
    pub answered_pct: Option<f64>,
    pub rounds_histogram: Vec<HistRow>,
    pub tool_frequency: Vec<ToolReport>,
    pub relisten_questions: usize,
    pub relisten_pct: Option<f64>,
    pub relisten_total: usize,
    pub unknown_tool_calls: usize,
    pub unknown_tool_questions: usize,
}
