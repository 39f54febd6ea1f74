//! Reading trace directories.

use std::path::Path;

use thiserror::Error;

use hearsay_core::trace::TraceError;
use hearsay_core::{import_trace, RunTrace};

pub const TRACE_SUFFIX: &str = ".trace.json";

#[derive(Debug, Error)]
pub enum TraceLoadError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Invalid { path: String, source: TraceError },
    #[error("{path}: trace for {found:?} in a file named for another question")]
    Misnamed { path: String, found: String },
}

/// Every `*.trace.json` in `dir`, ordered by file name. Any unreadable or
/// invalid trace is an error: analytics never silently drop runs.
pub fn load_traces(dir: &Path) -> Result<Vec<RunTrace>, TraceLoadError> {
    let io = |source| TraceLoadError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(TRACE_SUFFIX)))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let path = p.display().to_string();
            let text = std::fs::read_to_string(p).map_err(|source| TraceLoadError::Io { path: path.clone(), source })?;
            let trace = import_trace(&text).map_err(|source| TraceLoadError::Invalid { path: path.clone(), source })?;
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.trim_end_matches(TRACE_SUFFIX) != trace.question_id {
                return Err(TraceLoadError::Misnamed {
                    path,
                    found: trace.question_id,
                });
            }
            Ok(trace)
        })
        .collect()
}
