use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid run configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapBehavior {
    /// Skip further planning and go straight to summary and answer.
    #[default]
    ForceAnswer,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub round_cap: u32,
    pub model_temperature: f64,
    pub format_retry_budget: u32,
    pub action_repair_budget: u32,
    pub tool_inflight_cap: usize,
    pub wall_clock_s: f64,
    pub at_round_cap: CapBehavior,
    /// Per-item cap on evidence payload characters in the planner view.
    /// `None` shows everything.
    pub evidence_char_cap: Option<usize>,
    pub template_version: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            round_cap: 15,
            model_temperature: 0.05,
            format_retry_budget: 2,
            action_repair_budget: 2,
            tool_inflight_cap: 4,
            wall_clock_s: 600.0,
            at_round_cap: CapBehavior::ForceAnswer,
            evidence_char_cap: None,
            template_version: crate::templates::DEFAULT_VERSION.to_string(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.round_cap < 1 {
            return Err(ConfigError("round_cap must be at least 1".into()));
        }
        if self.format_retry_budget < 1 || self.action_repair_budget < 1 || self.tool_inflight_cap < 1 {
            return Err(ConfigError("retry budgets and the in-flight cap must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.model_temperature) {
            return Err(ConfigError(format!(
                "model_temperature {} outside [0, 2]",
                self.model_temperature
            )));
        }
        if !(self.wall_clock_s.is_finite() && self.wall_clock_s > 0.0) {
            return Err(ConfigError("wall_clock_s must be positive".into()));
        }
        if self.evidence_char_cap == Some(0) {
            return Err(ConfigError("evidence_char_cap must be positive when set".into()));
        }
        Ok(())
    }
}
