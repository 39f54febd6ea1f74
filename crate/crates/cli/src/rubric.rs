//! Instance-level rubric aggregation over externally produced judgments.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rounding::Rational;

pub const CRITERIA: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricJudgment {
    pub question_id: String,
    pub answer_correct: bool,
    pub criteria: [bool; CRITERIA],
}

/// Zero for an incorrect answer, otherwise the fraction of criteria met.
pub fn rubric_score(j: &RubricJudgment) -> Rational {
    if !j.answer_correct {
        return Rational::from_integer(0);
    }
    Rational::new(j.criteria.iter().filter(|&&c| c).count() as i64, CRITERIA as i64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RubricReport {
    pub per_question: Vec<(String, Rational)>,
    /// `None` for an empty input.
    pub mean: Option<Rational>,
}

pub fn aggregate_rubric(judgments: &[RubricJudgment]) -> RubricReport {
    let per_question: Vec<(String, Rational)> = judgments.iter().map(|j| (j.question_id.clone(), rubric_score(j))).collect();
    let mean = (!per_question.is_empty()).then(|| {
        per_question.iter().map(|(_, s)| *s).sum::<Rational>() / Rational::from_integer(per_question.len() as i64)
    });
    RubricReport { per_question, mean }
}

#[derive(Debug, Error)]
pub enum RubricError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

pub fn load_judgments(path: &Path) -> Result<Vec<RubricJudgment>, RubricError> {
    let text = std::fs::read_to_string(path).map_err(|source| RubricError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RubricError::Line {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
