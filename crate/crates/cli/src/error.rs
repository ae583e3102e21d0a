use std::fmt;
use std::path::PathBuf;

use sigfactor_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), line, message: message.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Json { .. } => "json",
            CliError::Config(_) => "config",
            CliError::Model(e) => match e {
                CoreError::Shape(_) => "shape",
                CoreError::DuplicateId(_) => "duplicate_id",
                CoreError::NonFinite { .. } => "non_finite",
                CoreError::Invalid(_) => "invalid",
                CoreError::EmptyResult => "empty_result",
                CoreError::InsufficientData(_) => "insufficient_data",
                CoreError::RankDeficient(_) => "rank_deficient",
                CoreError::Numeric { .. } => "numeric",
                CoreError::Config(_) => "config",
                CoreError::Coverage => "coverage",
                CoreError::Alignment(_) => "alignment",
                CoreError::Domain(_) => "domain",
                CoreError::Optimization { .. } => "optimization",
                CoreError::Singular(_) => "singular",
                CoreError::DegenerateSplit => "degenerate_split",
            },
        }
    }

    pub fn path(&self) -> Option<&std::path::Path> {
        match self {
            CliError::Io { path, .. } | CliError::Parse { path, .. } | CliError::Json { path, .. } => Some(path),
            _ => None,
        }
    }
}

/// `error kind=<kind> [path=<path>] message=<json string>` on one line.
pub struct ErrorLine<'a>(pub &'a CliError);

impl fmt::Display for ErrorLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error kind={}", self.0.kind())?;
        if let Some(p) = self.0.path() {
            write!(f, " path={}", serde_json::Value::String(p.display().to_string()))?;
        }
        write!(f, " message={}", serde_json::Value::String(self.0.to_string()))
    }
}
