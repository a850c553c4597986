//! Command-line harness: single plans and runs, the experiment suite, and
//! their CSV, JSON and SVG outputs.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod svg;

use std::path::{Path, PathBuf};

use autopath::scenario::{self, ScenarioSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Input(String),
    #[error("no path: {0}")]
    NoPath(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl HarnessError {
    /// 0 success, 1 usage or input error, 2 planner found no path.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::NoPath(_) => 2,
            HarnessError::Input(_) | HarnessError::Output { .. } => 1,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Output {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| HarnessError::Output {
        path: path.display().to_string(),
        source,
    })
}

/// A scenario plus the directory its relative map path resolves against.
#[derive(Debug, Clone)]
pub struct ScenarioInput {
    pub spec: ScenarioSpec,
    pub base: Option<PathBuf>,
}

impl ScenarioInput {
    pub fn base(&self) -> Option<&Path> {
        self.base.as_deref()
    }
}

/// Reads `builtin:<name>` or a scenario file; `map` replaces the scenario's
/// map reference.
pub fn load_scenario(arg: &str, map: Option<&Path>) -> Result<ScenarioInput, HarnessError> {
    let mut input = match arg.strip_prefix("builtin:") {
        Some(name) => ScenarioInput {
            spec: scenario::builtin(name).ok_or_else(|| {
                HarnessError::Input(format!(
                    "unknown builtin scenario {name:?} (known: {})",
                    scenario::BUILTIN_SCENARIOS.join(", ")
                ))
            })?,
            base: None,
        },
        None => {
            let path = Path::new(arg);
            let spec = ScenarioSpec::from_json(&read_text(path)?)
                .map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
            ScenarioInput {
                spec,
                base: path.parent().map(Path::to_path_buf),
            }
        }
    };
    if let Some(m) = map {
        input.spec.map = m.display().to_string();
        input.base = None;
    }
    Ok(input)
}
