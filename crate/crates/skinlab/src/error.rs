use std::path::PathBuf;

/// Failures of a CLI invocation, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("{experiment}: {source}")]
    Numerical {
        experiment: &'static str,
        #[source]
        source: skinlab_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        RunError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for anything wrong with the input, 3 for numerical failures, 1
    /// for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation { .. } | RunError::Parse(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;
