//! Harness configuration file: run limits, tool inventory and backends.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use hearsay_core::backend::ChatBackend;
use hearsay_core::registry::RegistryConfig;
use hearsay_core::{Backends, ExternalDecoder, QuestionInput, Registry, RunConfig, Runner, Script, ScriptedBackend, Templates};
use hearsay_remote::ChatEndpoint;

#[derive(Debug, Error)]
#[error("configuration error: {0}")]
pub struct HarnessConfigError(pub String);

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolsSection {
    /// Registry TOML replacing the built-in inventory.
    pub config: Option<PathBuf>,
    pub remote_base_url: Option<String>,
    pub enable: Vec<String>,
    pub disable: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSection {
    /// Replays `<script_dir>/<question id>.json` for each question.
    Scripted { script_dir: PathBuf },
    Chat { frontend: ChatEndpoint, planner: ChatEndpoint },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
    /// Command template for non-WAV inputs, with an `{input}` placeholder.
    #[serde(default)]
    pub decoder: Option<String>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub tools: ToolsSection,
    pub backends: BackendSection,
}

fn err(msg: impl Into<String>) -> HarnessConfigError {
    HarnessConfigError(msg.into())
}

impl HarnessConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, HarnessConfigError> {
        let mut cfg: HarnessConfig = toml::from_str(text).map_err(|e| err(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        if let Some(p) = cfg.templates_dir.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.tools.config.as_mut() {
            rebase(p);
        }
        if let BackendSection::Scripted { script_dir } = &mut cfg.backends {
            rebase(script_dir);
        }
        cfg.run.validate().map_err(|e| err(e.to_string()))?;
        if let BackendSection::Chat { frontend, planner } = &cfg.backends {
            for ep in [frontend, planner] {
                if let Some(var) = &ep.api_key_env {
                    if std::env::var_os(var).is_none() {
                        return Err(err(format!("environment variable {var} for {} is not set", ep.model)));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn registry(&self) -> Result<Registry, HarnessConfigError> {
        let mut reg = match &self.tools.config {
            Some(p) => RegistryConfig::load(p).map_err(|e| err(e.to_string()))?,
            None => RegistryConfig::default_inventory(),
        };
        if let Some(base) = &self.tools.remote_base_url {
            reg = reg.with_remote_base(base);
        }
        for (names, on) in [(&self.tools.enable, true), (&self.tools.disable, false)] {
            for name in names {
                if !reg.set_enabled(name, on) {
                    return Err(err(format!("unknown tool {name:?} in tools.{}", if on { "enable" } else { "disable" })));
                }
            }
        }
        Registry::new(reg, self.run.tool_inflight_cap).map_err(|e| err(e.to_string()))
    }

    pub fn templates(&self) -> Result<Templates, HarnessConfigError> {
        let v = &self.run.template_version;
        match &self.templates_dir {
            Some(dir) => Templates::load_dir(dir, v),
            None => Templates::builtin(v),
        }
        .map_err(|e| err(e.to_string()))
    }

    pub fn runner(&self) -> Result<Runner, HarnessConfigError> {
        let decoder = self
            .decoder
            .as_deref()
            .map(ExternalDecoder::new)
            .transpose()
            .map_err(|e| err(e.to_string()))?;
        Ok(Runner::new(self.run.clone(), Arc::new(self.registry()?), self.templates()?)
            .map_err(|e| err(e.to_string()))?
            .with_decoder(decoder))
    }

    /// Backends for one question. A missing or unreadable script yields an
    /// empty one, which fails that question alone.
    pub fn backends_for(&self, q: &QuestionInput) -> Backends {
        match &self.backends {
            BackendSection::Scripted { script_dir } => {
                let script = Script::load(&script_dir.join(format!("{}.json", q.id))).unwrap_or_default();
                Backends::shared(Arc::new(ScriptedBackend::new(script)))
            }
            BackendSection::Chat { frontend, planner } => Backends {
                frontend: Arc::new(ChatBackend::new(frontend.clone())),
                planner: Arc::new(ChatBackend::new(planner.clone())),
            },
        }
    }
}
