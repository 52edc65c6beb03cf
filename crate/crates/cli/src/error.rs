use std::path::PathBuf;

use thiserror::Error;

/// One rejected row of an input file. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {} rejected row(s):\n  {}", .issues.len(), format_issues(.issues))]
    Ingest { path: PathBuf, issues: Vec<RowIssue> },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("Table 1 check failed:\n  {}", .0.join("\n  "))]
    Table1(Vec<String>),

    #[error(transparent)]
    Model(#[from] merton_pl::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[RowIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n  ")
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
