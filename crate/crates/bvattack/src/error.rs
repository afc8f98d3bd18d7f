use thiserror::Error;

/// Errors surfaced by the command-line layer; all map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] bvattack_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
