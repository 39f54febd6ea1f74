//! Structural answer checks. Nothing here knows which option is correct.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpectedFormat {
    MultipleChoice { options: Vec<String> },
    FreeText { description: String },
}

impl ExpectedFormat {
    pub fn option_letter(index: usize) -> char {
        (b'A' + index as u8) as char
    }

    pub fn options(&self) -> &[String] {
        match self {
            ExpectedFormat::MultipleChoice { options } => options,
            ExpectedFormat::FreeText { .. } => &[],
        }
    }

    /// Human-readable statement of the structure an answer must follow.
    pub fn describe(&self) -> String {
        match self {
            ExpectedFormat::MultipleChoice { options } => {
                let listed: Vec<String> = options
                    .iter()
                    .enumerate()
                    .map(|(i, o)| format!("({}) {}", Self::option_letter(i), o))
                    .collect();
                format!(
                    "exactly one of the options {}-{}, given as the option letter or the exact option text: {}",
                    Self::option_letter(0),
                    Self::option_letter(options.len().saturating_sub(1)),
                    listed.join("; ")
                )
            }
            ExpectedFormat::FreeText { description } => format!("free text: {description}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormatVerdict {
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural_feedback: Option<String>,
}

impl FormatVerdict {
    pub fn ok() -> Self {
        FormatVerdict {
            valid: true,
            structural_feedback: None,
        }
    }
}

/// Casefold, drop punctuation, collapse whitespace.
pub fn normalize(text: &str) -> String {
    let kept: String = text
        .chars()
        .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
        .flat_map(char::to_lowercase)
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_unicode_punct(c: char) -> bool {
    matches!(c, '\u{2010}'..='\u{2027}' | '\u{3001}' | '\u{3002}' | '\u{ff0c}' | '\u{ff0e}')
}

fn letter_index(c: char, n: usize) -> Option<usize> {
    let up = c.to_ascii_uppercase();
    (up.is_ascii_uppercase() && ((up as u8 - b'A') as usize) < n).then(|| (up as u8 - b'A') as usize)
}

/// Resolves a draft to an option index: exact letter, then exact normalized
/// option text, then a unique leading `(X)` marker. Anything else is `None`.
pub fn resolve_option(draft: &str, options: &[String]) -> Option<usize> {
    let trimmed = draft.trim();
    let mut chars = trimmed.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if let Some(i) = letter_index(c, options.len()) {
            return Some(i);
        }
    }

    let norm = normalize(trimmed);
    if !norm.is_empty() {
        let hits: Vec<usize> = options
            .iter()
            .enumerate()
            .filter(|(_, o)| normalize(o) == norm)
            .map(|(i, _)| i)
            .collect();
        if let [only] = hits[..] {
            return Some(only);
        }
    }

    let b = trimmed.as_bytes();
    if b.len() >= 3 && b[0] == b'(' && b[2] == b')' {
        let idx = letter_index(b[1] as char, options.len())?;
        let rest = &trimmed[3..];
        let conflicting = (0..options.len())
            .filter(|&j| j != idx)
            .any(|j| rest.contains(&format!("({})", ExpectedFormat::option_letter(j))));
        if !conflicting {
            return Some(idx);
        }
    }
    None
}

pub fn validate_format(draft: &str, expected: &ExpectedFormat) -> FormatVerdict {
    match expected {
        ExpectedFormat::MultipleChoice { options } => {
            if resolve_option(draft, options).is_some() {
                FormatVerdict::ok()
            } else {
                FormatVerdict {
                    valid: false,
                    structural_feedback: Some(format!(
                        "The answer must be {}. Reply with only the option letter.",
                        expected.describe()
                    )),
                }
            }
        }
        ExpectedFormat::FreeText { .. } => {
            if draft.trim().is_empty() {
                FormatVerdict {
                    valid: false,
                    structural_feedback: Some(format!("The answer must be non-empty {}.", expected.describe())),
                }
            } else {
                FormatVerdict::ok()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn water() -> Vec<String> {
        ["hot water", "cold water", "both hot", "neither"]
            .map(String::from)
            .to_vec()
    }

    fn mc() -> ExpectedFormat {
        ExpectedFormat::MultipleChoice { options: water() }
    }

    #[test]
    fn resolution_table() {
        let o = water();
        let cases: [(&str, Option<usize>); 12] = [
            ("B", Some(1)),
            (" b ", Some(1)),
            ("E", None),
            ("Cold Water.", Some(1)),
            ("(B) cold water", Some(1)),
            ("(b) anything", Some(1)),
            ("(B) or (C)", None),
            ("the second one is hot", None),
            ("", None),
            ("B.", None),
            ("hot", None),
            ("NEITHER!", Some(3)),
        ];
        for (draft, want) in cases {
            assert_eq!(resolve_option(draft, &o), want, "{draft:?}");
        }
    }

    #[test]
    fn verdicts() {
        assert!(validate_format("B", &mc()).valid);
        let bad = validate_format("the second one is hot", &mc());
        assert!(!bad.valid);
        assert!(bad.structural_feedback.unwrap().contains("A-D"));
        assert!(validate_format("(B) cold water", &mc()).valid);
    }

    #[test]
    fn duplicate_option_texts_do_not_resolve_by_text() {
        let o = vec!["same".to_string(), "Same".to_string()];
        assert_eq!(resolve_option("same", &o), None);
        assert_eq!(resolve_option("A", &o), Some(0));
    }

    #[test]
    fn free_text_needs_content() {
        let f = ExpectedFormat::FreeText {
            description: "a short phrase".into(),
        };
        assert!(validate_format("a dog barking", &f).valid);
        assert!(!validate_format("   ", &f).valid);
    }
}
