//! Parameter checking against a tool's input schema.

use serde_json::{Map, Value};
use thiserror::Error;

use super::{ParamKind, ParamSpec, ToolSpec};
use crate::ids::ArtifactId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct ParamError(pub String);

/// Parameters after checking, with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedParams {
    pub values: Map<String, Value>,
    /// Referenced artifacts in schema order, flattened.
    pub artifacts: Vec<ArtifactId>,
}

impl CheckedParams {
    fn value(&self, name: &str) -> Option<&Value> {
        self.values.get(name).filter(|v| !v.is_null())
    }

    pub fn f64(&self, name: &str) -> Option<f64> {
        self.value(name).and_then(Value::as_f64)
    }

    pub fn i64(&self, name: &str) -> Option<i64> {
        self.value(name).and_then(|v| v.as_i64().or_else(|| v.as_f64().map(|f| f as i64)))
    }

    pub fn str(&self, name: &str) -> Option<&str> {
        self.value(name).and_then(Value::as_str)
    }

    pub fn bool(&self, name: &str) -> Option<bool> {
        self.value(name).and_then(Value::as_bool)
    }

    pub fn strings(&self, name: &str) -> Vec<&str> {
        self.value(name)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default()
    }

    pub fn artifact(&self, name: &str) -> Option<ArtifactId> {
        self.str(name).and_then(|s| s.parse().ok())
    }

    pub fn artifact_list(&self, name: &str) -> Vec<ArtifactId> {
        self.strings(name).into_iter().filter_map(|s| s.parse().ok()).collect()
    }
}

fn number(p: &ParamSpec, v: &Value) -> Result<f64, ParamError> {
    v.as_f64()
        .filter(|f| f.is_finite())
        .ok_or_else(|| ParamError(format!("{} must be a finite number", p.name)))
}

/// Type-checks one value; ids are checked for form only.
pub(crate) fn check_value(p: &ParamSpec, v: &Value) -> Result<(), ParamError> {
    let fail = |what: &str| Err(ParamError(format!("{} must be {what}", p.name)));
    match p.kind {
        ParamKind::ArtifactId => match v.as_str().map(str::parse::<ArtifactId>) {
            Some(Ok(_)) => Ok(()),
            _ => fail("an audio artifact id such as audio_0"),
        },
        ParamKind::ArtifactIdList => match v.as_array() {
            Some(a) if !a.is_empty() => {
                for item in a {
                    if !matches!(item.as_str().map(str::parse::<ArtifactId>), Some(Ok(_))) {
                        return fail("a non-empty list of audio artifact ids");
                    }
                }
                Ok(())
            }
            _ => fail("a non-empty list of audio artifact ids"),
        },
        ParamKind::Seconds => match number(p, v)? {
            s if s >= 0.0 => Ok(()),
            _ => fail("a non-negative number of seconds"),
        },
        ParamKind::Hertz => match number(p, v)? {
            f if f > 0.0 => Ok(()),
            _ => fail("a positive frequency in Hz"),
        },
        ParamKind::Decibels | ParamKind::Number => number(p, v).map(|_| ()),
        ParamKind::Fraction => match number(p, v)? {
            f if (0.0..=1.0).contains(&f) => Ok(()),
            _ => fail("a number in [0, 1]"),
        },
        ParamKind::Integer => match v.as_i64().or_else(|| v.as_f64().filter(|f| f.fract() == 0.0 && f.abs() < 9e15).map(|f| f as i64)) {
            Some(_) => Ok(()),
            None => fail("an integer"),
        },
        ParamKind::Text => match v.as_str() {
            Some(_) => Ok(()),
            None => fail("text"),
        },
        ParamKind::Boolean => match v.as_bool() {
            Some(_) => Ok(()),
            None => fail("true or false"),
        },
        ParamKind::Choice => match v.as_str() {
            Some(s) if p.choices.iter().any(|c| c == s) => Ok(()),
            _ => fail(&format!("one of {}", p.choices.join(", "))),
        },
        ParamKind::ChoiceList => {
            let items = v.as_array().filter(|a| !a.is_empty());
            let ok = items.is_some_and(|a| {
                let mut seen = Vec::new();
                a.iter().all(|i| match i.as_str() {
                    Some(s) if p.choices.iter().any(|c| c == s) && !seen.contains(&s) => {
                        seen.push(s);
                        true
                    }
                    _ => false,
                })
            });
            if ok {
                Ok(())
            } else {
                fail(&format!("a non-empty list of distinct values from {}", p.choices.join(", ")))
            }
        }
    }
}

/// Checks `params` against the schema and the artifacts registered so far.
/// `registered` is the artifact count when the batch started, so ids produced
/// inside the same batch are refused.
pub fn validate_params(spec: &ToolSpec, params: &Map<String, Value>, registered: usize) -> Result<CheckedParams, ParamError> {
    if let Some(unknown) = params.keys().find(|k| !spec.params.iter().any(|p| &p.name == *k)) {
        let accepted: Vec<&str> = spec.params.iter().map(|p| p.name.as_str()).collect();
        return Err(ParamError(format!(
            "unknown parameter {unknown}; accepted: {}",
            accepted.join(", ")
        )));
    }
    let mut values = Map::new();
    let mut artifacts = Vec::new();
    for p in &spec.params {
        let given = params.get(&p.name).filter(|v| !v.is_null());
        let v = match (given, &p.default) {
            (Some(v), _) => v,
            (None, Some(d)) => d,
            (None, None) if p.required => return Err(ParamError(format!("missing required parameter {}", p.name))),
            (None, None) => continue,
        };
        check_value(p, v)?;
        let ids: Vec<ArtifactId> = match p.kind {
            ParamKind::ArtifactId => vec![v.as_str().unwrap_or_default().parse().map_err(|_| ParamError(p.name.clone()))?],
            ParamKind::ArtifactIdList => v
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|i| i.as_str().and_then(|s| s.parse().ok()))
                .collect(),
            _ => Vec::new(),
        };
        for id in ids {
            if id.index() >= registered {
                return Err(ParamError(format!(
                    "{id} is not a registered artifact; calls in one batch must be independent and cannot use artifacts produced by the same batch"
                )));
            }
            artifacts.push(id);
        }
        values.insert(p.name.clone(), v.clone());
    }
    Ok(CheckedParams { values, artifacts })
}
