//! Line-delimited question records.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use hearsay_core::orchestrator::valid_question_id;
use hearsay_core::planner::resolve_option;
use hearsay_core::{ExpectedFormat, MediaInput, QuestionInput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRecord {
    pub id: String,
    /// Paths relative to the dataset file.
    pub audio: Vec<String>,
    pub question: String,
    /// Empty for free-text questions.
    #[serde(default)]
    pub options: Vec<String>,
    /// Option letter or exact option text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modality: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_category: Option<String>,
    /// Expected answer shape for free-text questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_format: Option<String>,
}

impl QuestionRecord {
    pub fn expected_format(&self) -> ExpectedFormat {
        if self.options.is_empty() {
            ExpectedFormat::FreeText {
                description: self.answer_format.clone().unwrap_or_else(|| "a short answer".into()),
            }
        } else {
            ExpectedFormat::MultipleChoice {
                options: self.options.clone(),
            }
        }
    }

    /// Index of the keyed option, if the record is a keyed multiple-choice
    /// question.
    pub fn answer_index(&self) -> Option<usize> {
        resolve_option(self.answer.as_deref()?, &self.options)
    }

    fn check(&self) -> Result<(), String> {
        if !valid_question_id(&self.id) {
            return Err(format!("invalid id {:?}", self.id));
        }
        if self.audio.is_empty() || self.audio.iter().any(|a| a.trim().is_empty()) {
            return Err("at least one non-empty audio path is required".into());
        }
        if self.question.trim().is_empty() {
            return Err("empty question".into());
        }
        if self.options.len() == 1 {
            return Err("multiple-choice questions need at least two options".into());
        }
        if !self.options.is_empty() {
            if let Some(key) = &self.answer {
                if self.answer_index().is_none() {
                    return Err(format!("answer {key:?} matches no option"));
                }
            }
        }
        Ok(())
    }

    /// Reads the audio files. Unreadable files become empty inputs so the
    /// run fails for this question alone.
    pub fn to_input(&self, base_dir: &Path) -> QuestionInput {
        let audio = self
            .audio
            .iter()
            .map(|rel| {
                let file: PathBuf = base_dir.join(rel);
                let bytes = std::fs::read(&file).unwrap_or_default();
                MediaInput {
                    bytes: Arc::new(bytes),
                    path: rel.clone(),
                    file: Some(file),
                }
            })
            .collect();
        QuestionInput {
            id: self.id.clone(),
            question: self.question.clone(),
            expected_format: self.expected_format(),
            audio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid dataset: {}", join(.0))]
    Invalid(Vec<LineIssue>),
    #[error("duplicate question id {id:?} on lines {first} and {second}")]
    DuplicateId { id: String, first: usize, second: usize },
}

fn join(issues: &[LineIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<QuestionRecord>,
    /// Lines skipped under lenient loading.
    pub skipped: Vec<LineIssue>,
}

pub fn parse_dataset(text: &str, lenient: bool) -> Result<Dataset, DatasetError> {
    let mut records: Vec<(usize, QuestionRecord)> = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str::<QuestionRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.check().map(|_| r));
        match rec {
            Ok(r) => records.push((n, r)),
            Err(message) => issues.push(LineIssue { line: n, message }),
        }
    }
    if !issues.is_empty() && !lenient {
        return Err(DatasetError::Invalid(issues));
    }
    let mut seen = std::collections::BTreeMap::new();
    for (n, r) in &records {
        if let Some(first) = seen.insert(r.id.as_str(), *n) {
            return Err(DatasetError::DuplicateId {
                id: r.id.clone(),
                first,
                second: *n,
            });
        }
    }
    Ok(Dataset {
        records: records.into_iter().map(|(_, r)| r).collect(),
        skipped: issues,
    })
}

pub fn load_dataset(path: &Path, lenient: bool) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text, lenient)
}

/// Ids present in the dataset, for joins.
pub fn ids(records: &[QuestionRecord]) -> BTreeSet<&str> {
    records.iter().map(|r| r.id.as_str()).collect()
}
