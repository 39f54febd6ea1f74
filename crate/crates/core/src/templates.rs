//! Versioned prompt templates. The built-in set is compiled in; a directory
//! with the same file names can replace it without code changes.

use std::path::Path;

use thiserror::Error;

pub const DEFAULT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("reading template {name} from {dir}: {source}")]
    Io {
        name: &'static str,
        dir: String,
        source: std::io::Error,
    },
    #[error("unknown built-in template version {0:?}")]
    UnknownVersion(String),
}

macro_rules! template_set {
    ($($field:ident),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct Templates {
            pub version: String,
            $(pub $field: String,)*
        }

        impl Templates {
            pub fn builtin(version: &str) -> Result<Self, TemplateError> {
                if version != DEFAULT_VERSION {
                    return Err(TemplateError::UnknownVersion(version.to_string()));
                }
                Ok(Templates {
                    version: version.to_string(),
                    $($field: include_str!(concat!("../templates/v1/", stringify!($field), ".txt")).to_string(),)*
                })
            }

            /// Loads `<dir>/<name>.txt` for every template.
            pub fn load_dir(dir: &Path, version: &str) -> Result<Self, TemplateError> {
                Ok(Templates {
                    version: version.to_string(),
                    $($field: std::fs::read_to_string(dir.join(concat!(stringify!($field), ".txt")))
                        .map_err(|source| TemplateError::Io {
                            name: stringify!($field),
                            dir: dir.display().to_string(),
                            source,
                        })?,)*
                })
            }
        }
    };
}

template_set!(
    frontend_system,
    perception,
    perception_repair,
    planner_system,
    plan,
    plan_repair,
    action,
    action_repair,
    follow_up,
    final_answer,
    answer_retry,
    direct,
);

impl Default for Templates {
    fn default() -> Self {
        Templates::builtin(DEFAULT_VERSION).expect("built-in templates exist")
    }
}

/// Substitutes `{{key}}` placeholders. Unknown placeholders are left intact.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.trim_end().to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}
