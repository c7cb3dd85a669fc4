use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

/// Everything the command line can fail with. Each variant maps to an exit
/// code and a machine-readable JSON record.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("solver error: {0}")]
    Solver(#[from] spdelab::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for invalid input, 3 for numerical failures, 4 for output failures.
    /// (1 is reserved for runs whose checks fail.)
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Solver(_) => "solver",
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }

    pub fn record(&self) -> serde_json::Value {
        let key = match self {
            CliError::Config { key, .. } => Some(key.clone()),
            _ => None,
        };
        json!({
            "schema_version": crate::SCHEMA_VERSION,
            "status": "error",
            "kind": self.kind(),
            "key": key,
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
    }
}
