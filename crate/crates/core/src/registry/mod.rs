//! The planner-facing tool inventory and tool dispatch.

mod exec;
mod params;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use hearsay_remote::{OutputSchema, RemoteClient, RemoteToolEndpoint, RequestMedia};

pub use exec::RegistryError;
pub use params::{validate_params, CheckedParams, ParamError};

use crate::tools::native::NATIVE_TOOLS;

pub const DEFAULT_CONFIG: &str = include_str!("default_tools.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    AudioDerivation,
    TemporalSegmentation,
    MetadataValidation,
    SpeechSpeaker,
    AcousticMusicFeature,
    SignalVisualization,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::AudioDerivation,
        Category::TemporalSegmentation,
        Category::MetadataValidation,
        Category::SpeechSpeaker,
        Category::AcousticMusicFeature,
        Category::SignalVisualization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::AudioDerivation => "audio_derivation",
            Category::TemporalSegmentation => "temporal_segmentation",
            Category::MetadataValidation => "metadata_validation",
            Category::SpeechSpeaker => "speech_speaker",
            Category::AcousticMusicFeature => "acoustic_music_feature",
            Category::SignalVisualization => "signal_visualization",
        }
    }

    /// Derivation and segmentation prepare inputs for later steps; the other
    /// categories extract observations.
    pub fn role(self) -> ToolRole {
        match self {
            Category::AudioDerivation | Category::TemporalSegmentation => ToolRole::Transformation,
            _ => ToolRole::Perception,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolRole {
    Perception,
    Transformation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Evidence,
    Artifact,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Native,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    ArtifactId,
    ArtifactIdList,
    Seconds,
    Hertz,
    Decibels,
    Fraction,
    Integer,
    Number,
    Text,
    Choice,
    ChoiceList,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub timeout_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_media")]
    pub request_media: RequestMedia,
    pub output_schema: OutputSchema,
    /// Render waveform/spectrogram PNGs natively and attach them.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub render_plots: bool,
}

fn is_default_media(m: &RequestMedia) -> bool {
    *m == RequestMedia::default()
}

fn enabled_default() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolSpec {
    pub name: String,
    pub category: Category,
    pub role: ToolRole,
    pub output_kind: OutputKind,
    pub backend: BackendKind,
    #[serde(default = "enabled_default", skip_serializing_if = "is_true")]
    pub enabled: bool,
    /// Native implementation key; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implementation: Option<String>,
    pub description: String,
    pub boundary: String,
    pub params: Vec<ParamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote: Option<RemoteSettings>,
}

impl ToolSpec {
    pub fn implementation(&self) -> &str {
        self.implementation.as_deref().unwrap_or(&self.name)
    }

    pub fn planner_facing(&self) -> PlannerToolSpec {
        PlannerToolSpec {
            name: self.name.clone(),
            category: self.category,
            role: self.role,
            description: self.description.clone(),
            boundary: self.boundary.clone(),
            input_schema: self.params.clone(),
            output_kind: self.output_kind,
        }
    }
}

/// What the planner may see of a tool: never the backend or endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerToolSpec {
    pub name: String,
    pub category: Category,
    pub role: ToolRole,
    pub description: String,
    pub boundary: String,
    pub input_schema: Vec<ParamSpec>,
    pub output_kind: OutputKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryConfig {
    pub remote_base_url: String,
    #[serde(rename = "tool")]
    pub tools: Vec<ToolSpec>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("registry config: {0}")]
    Parse(String),
    #[error("tool {tool}: {reason}")]
    Tool { tool: String, reason: String },
}

fn tool_err(tool: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Tool {
        tool: tool.to_string(),
        reason: reason.into(),
    }
}

impl RegistryConfig {
    pub fn default_inventory() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("default registry config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RegistryConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("registry config serializes")
    }

    pub fn with_remote_base(mut self, base: &str) -> Self {
        self.remote_base_url = base.trim_end_matches('/').to_string();
        self
    }

    pub fn set_enabled(&mut self, name: &str, enabled: bool) -> bool {
        match self.tools.iter_mut().find(|t| t.name == name) {
            Some(t) => {
                t.enabled = enabled;
                true
            }
            None => false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut names = BTreeSet::new();
        for t in &self.tools {
            let token_ok = !t.name.is_empty()
                && t.name
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
            if !token_ok {
                return Err(tool_err(&t.name, "name must be a lowercase token"));
            }
            if !names.insert(t.name.as_str()) {
                return Err(tool_err(&t.name, "duplicate name"));
            }
            if t.role != t.category.role() {
                return Err(tool_err(&t.name, format!("role does not match category {}", t.category.as_str())));
            }
            if t.boundary.trim().is_empty() {
                return Err(tool_err(&t.name, "boundary statement is empty"));
            }
            if t.role == ToolRole::Perception && t.output_kind != OutputKind::Evidence {
                return Err(tool_err(&t.name, "perception tools produce evidence only"));
            }
            if t.role == ToolRole::Transformation && t.category == Category::AudioDerivation && t.output_kind == OutputKind::Evidence {
                return Err(tool_err(&t.name, "derivation tools must produce artifacts"));
            }
            match (t.backend, &t.remote) {
                (BackendKind::Native, Some(_)) => return Err(tool_err(&t.name, "native tool has remote settings")),
                (BackendKind::Remote, None) => return Err(tool_err(&t.name, "remote tool lacks remote settings")),
                (BackendKind::Remote, Some(r)) => {
                    if !(r.timeout_s.is_finite() && r.timeout_s > 0.0) {
                        return Err(tool_err(&t.name, "timeout_s must be positive"));
                    }
                    if t.output_kind != OutputKind::Evidence {
                        return Err(tool_err(&t.name, "remote tools produce evidence only"));
                    }
                }
                (BackendKind::Native, None) => {
                    if !NATIVE_TOOLS.contains(&t.implementation()) {
                        return Err(tool_err(&t.name, format!("no native implementation {:?}", t.implementation())));
                    }
                }
            }
            let mut pnames = BTreeSet::new();
            let mut artifact_params = 0;
            for p in &t.params {
                if !pnames.insert(p.name.as_str()) {
                    return Err(tool_err(&t.name, format!("duplicate parameter {}", p.name)));
                }
                let choice_kind = matches!(p.kind, ParamKind::Choice | ParamKind::ChoiceList);
                if choice_kind == p.choices.is_empty() {
                    return Err(tool_err(&t.name, format!("parameter {}: choices must be given exactly for choice kinds", p.name)));
                }
                if matches!(p.kind, ParamKind::ArtifactId | ParamKind::ArtifactIdList) {
                    artifact_params += 1;
                    if p.default.is_some() {
                        return Err(tool_err(&t.name, format!("artifact parameter {} cannot have a default", p.name)));
                    }
                }
                if let Some(d) = &p.default {
                    params::check_value(p, d).map_err(|e| tool_err(&t.name, format!("default: {e}")))?;
                }
            }
            if artifact_params == 0 {
                return Err(tool_err(&t.name, "tools operate on at least one artifact parameter"));
            }
        }
        Ok(())
    }
}

/// Immutable after construction and shareable across runs.
pub struct Registry {
    config: RegistryConfig,
    enabled: Vec<ToolSpec>,
    client: RemoteClient,
}

impl Registry {
    pub fn new(config: RegistryConfig, inflight_cap: usize) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut enabled: Vec<ToolSpec> = config.tools.iter().filter(|t| t.enabled).cloned().collect();
        enabled.sort_by(|a, b| (a.category, &a.name).cmp(&(b.category, &b.name)));
        Ok(Registry {
            config,
            enabled,
            client: RemoteClient::new(inflight_cap),
        })
    }

    pub fn default_inventory() -> Self {
        Self::new(RegistryConfig::default_inventory(), hearsay_remote::DEFAULT_INFLIGHT_CAP)
            .expect("default registry is valid")
    }

    pub fn config(&self) -> &RegistryConfig {
        &self.config
    }

    /// Enabled tools, in category order then by name.
    pub fn specs(&self) -> &[ToolSpec] {
        &self.enabled
    }

    pub fn planner_inventory(&self) -> Vec<PlannerToolSpec> {
        self.enabled.iter().map(ToolSpec::planner_facing).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.enabled.iter().map(|t| t.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.enabled.iter().find(|t| t.name == name)
    }

    pub fn category_counts(&self) -> Vec<(Category, usize)> {
        Category::ALL
            .iter()
            .map(|&c| (c, self.enabled.iter().filter(|t| t.category == c).count()))
            .collect()
    }

    /// Compact text listing for prompts.
    pub fn inventory_text(&self) -> String {
        serde_json::to_string_pretty(&self.planner_inventory()).expect("inventory serializes")
    }

    fn endpoint(&self, spec: &ToolSpec) -> Option<RemoteToolEndpoint> {
        let r = spec.remote.as_ref()?;
        Some(RemoteToolEndpoint {
            tool_name: spec.name.clone(),
            url: r.url.clone().unwrap_or_else(|| {
                format!(
                    "{}{}{}",
                    self.config.remote_base_url.trim_end_matches('/'),
                    hearsay_remote::TOOL_ROUTE_PREFIX,
                    spec.name
                )
            }),
            timeout_s: r.timeout_s,
            auth: r.auth.clone(),
            request_media: r.request_media,
        })
    }
}
