//! Scenario files: TOML documents holding a full [`SimConfig`]. Missing keys
//! take the documented defaults, unknown keys are rejected.

use std::path::Path;

use herding_core::sim::{Derived, SimConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses without validating.
pub fn parse_scenario(text: &str) -> Result<SimConfig, ScenarioError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

/// Checks every constraint the engine relies on, including formation and
/// beacon-bound feasibility.
pub fn validate(config: &SimConfig) -> Result<Derived, ScenarioError> {
    config.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<SimConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config = parse_scenario(&text)?;
    validate(&config)?;
    Ok(config)
}

pub fn to_toml(config: &SimConfig) -> String {
    toml::to_string(config).expect("configuration values are always representable in TOML")
}
