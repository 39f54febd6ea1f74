//! Multiple-choice scoring of finished runs against answer keys.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use hearsay_core::planner::resolve_option;
use hearsay_core::RunTrace;

use crate::dataset::QuestionRecord;
use crate::rounding::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub question_id: String,
    pub correct: bool,
    /// Option the final answer resolved to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<usize>,
    pub key: usize,
    /// `answered`, `failed` or `missing`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictFile {
    pub n: usize,
    pub correct: usize,
    /// Percentage rounded to one decimal.
    pub accuracy_pct: f64,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub verdicts: Vec<Verdict>,
    pub correct: usize,
}

impl ScoreReport {
    pub fn n(&self) -> usize {
        self.verdicts.len()
    }

    /// Exact fraction correct; `None` when nothing was scored.
    pub fn accuracy(&self) -> Option<Rational> {
        rounding::ratio(self.correct as i64, self.n() as i64)
    }

    pub fn to_file(&self) -> VerdictFile {
        VerdictFile {
            n: self.n(),
            correct: self.correct,
            accuracy_pct: rounding::percent(self.correct as i64, self.n() as i64)
                .map_or(0.0, |p| rounding::to_f64(p, 1)),
            verdicts: self.verdicts.clone(),
        }
    }
}

/// Scores every keyed multiple-choice record. A missing trace, a failed run
/// or a draft that resolves to no option is incorrect.
pub fn score_multiple_choice(traces: &[RunTrace], dataset: &[QuestionRecord]) -> ScoreReport {
    let by_id: BTreeMap<&str, &RunTrace> = traces.iter().map(|t| (t.question_id.as_str(), t)).collect();
    let mut verdicts = Vec::new();
    for rec in dataset {
        let Some(key) = rec.answer_index() else { continue };
        let (selected, status) = match by_id.get(rec.id.as_str()) {
            None => (None, "missing"),
            Some(t) => match t.final_answer() {
                Some(text) => (resolve_option(text, &rec.options), "answered"),
                None => (None, "failed"),
            },
        };
        verdicts.push(Verdict {
            question_id: rec.id.clone(),
            correct: selected == Some(key),
            selected,
            key,
            status: status.into(),
        });
    }
    let correct = verdicts.iter().filter(|v| v.correct).count();
    ScoreReport { verdicts, correct }
}
