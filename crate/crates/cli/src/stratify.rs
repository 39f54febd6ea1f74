//! Accuracy grouped by how many tools the agent called.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use hearsay_core::{Outcome, RunTrace};

use crate::dataset::QuestionRecord;
use crate::rounding::{self, Rational};
use crate::scoring::score_multiple_choice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Bucket {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "4-5")]
    FourToFive,
    #[serde(rename = "6-10")]
    SixToTen,
    #[serde(rename = ">10")]
    OverTen,
}

impl Bucket {
    pub const ALL: [Bucket; 7] = [
        Bucket::Zero,
        Bucket::One,
        Bucket::Two,
        Bucket::Three,
        Bucket::FourToFive,
        Bucket::SixToTen,
        Bucket::OverTen,
    ];

    pub fn of(calls: usize) -> Bucket {
        match calls {
            0 => Bucket::Zero,
            1 => Bucket::One,
            2 => Bucket::Two,
            3 => Bucket::Three,
            4..=5 => Bucket::FourToFive,
            6..=10 => Bucket::SixToTen,
            _ => Bucket::OverTen,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Zero => "0",
            Bucket::One => "1",
            Bucket::Two => "2",
            Bucket::Three => "3",
            Bucket::FourToFive => "4-5",
            Bucket::SixToTen => "6-10",
            Bucket::OverTen => ">10",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuestionOutcome {
    pub tool_calls: usize,
    pub agent_correct: bool,
    pub baseline_correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketRow {
    pub bucket: Bucket,
    pub n: usize,
    pub agent_correct: usize,
    pub baseline_correct: usize,
}

impl BucketRow {
    pub fn agent_pct(&self) -> Option<Rational> {
        rounding::percent(self.agent_correct as i64, self.n as i64)
    }

    pub fn baseline_pct(&self) -> Option<Rational> {
        rounding::percent(self.baseline_correct as i64, self.n as i64)
    }

    /// Exact difference in percentage points, rounded only for display.
    pub fn delta_pp(&self) -> Option<Rational> {
        rounding::percent(self.agent_correct as i64 - self.baseline_correct as i64, self.n as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joined {
    pub outcomes: Vec<QuestionOutcome>,
    /// Keyed questions whose agent run did not finish with an answer.
    pub excluded_unfinished: Vec<String>,
}

/// Pairs each keyed question's agent run with its baseline verdict. Runs that
/// ended without an answer are left out of the buckets, so bucket counts sum
/// to the completed runs; every completed run needs a baseline verdict.
pub fn join_outcomes(traces: &[RunTrace], dataset: &[QuestionRecord], baseline: &BTreeMap<String, bool>) -> Result<Joined, String> {
    let by_id: BTreeMap<&str, &RunTrace> = traces.iter().map(|t| (t.question_id.as_str(), t)).collect();
    let agent = score_multiple_choice(traces, dataset);
    let mut joined = Joined {
        outcomes: Vec::new(),
        excluded_unfinished: Vec::new(),
    };
    for v in &agent.verdicts {
        let Some(t) = by_id.get(v.question_id.as_str()) else {
            return Err(format!("no agent trace for {}", v.question_id));
        };
        if t.outcome != Some(Outcome::Answered) {
            joined.excluded_unfinished.push(v.question_id.clone());
            continue;
        }
        let Some(&b) = baseline.get(&v.question_id) else {
            return Err(format!("no baseline verdict for {}", v.question_id));
        };
        joined.outcomes.push(QuestionOutcome {
            tool_calls: t.tool_calls().count(),
            agent_correct: v.correct,
            baseline_correct: b,
        });
    }
    Ok(joined)
}

/// One row per bucket, empty buckets included, in bucket order.
pub fn stratify_by_tool_calls(per_question: &[QuestionOutcome]) -> Vec<BucketRow> {
    Bucket::ALL
        .iter()
        .map(|&bucket| {
            let members: Vec<_> = per_question.iter().filter(|q| Bucket::of(q.tool_calls) == bucket).collect();
            BucketRow {
                bucket,
                n: members.len(),
                agent_correct: members.iter().filter(|q| q.agent_correct).count(),
                baseline_correct: members.iter().filter(|q| q.baseline_correct).count(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowReport {
    pub bucket: Bucket,
    pub n: usize,
    pub agent_pct: Option<f64>,
    pub baseline_pct: Option<f64>,
    pub delta_pp: Option<f64>,
}

pub fn report(rows: &[BucketRow]) -> Vec<RowReport> {
    rows.iter()
        .map(|r| RowReport {
            bucket: r.bucket,
            n: r.n,
            agent_pct: r.agent_pct().map(|p| rounding::to_f64(p, 1)),
            baseline_pct: r.baseline_pct().map(|p| rounding::to_f64(p, 1)),
            delta_pp: r.delta_pp().map(|p| rounding::to_f64(p, 1)),
        })
        .collect()
}

pub fn render_table(rows: &[BucketRow]) -> String {
    let mut out = String::from("tool calls      N    agent  baseline      delta\n");
    let cell = |x: Option<Rational>| x.map_or_else(|| "-".to_string(), |p| rounding::fmt_fixed(p, 1));
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>8} {:>9} {:>10}",
            r.bucket.label(),
            r.n,
            cell(r.agent_pct()),
            cell(r.baseline_pct()),
            r.delta_pp().map_or_else(|| "-".to_string(), |d| rounding::fmt_signed(d, 1)),
        );
    }
    out
}
