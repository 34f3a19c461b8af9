use rimflow_core::RimflowError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] RimflowError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{failed} verification check(s) failed: {names}")]
    Verification { failed: usize, names: String },
    #[error("run stopped early: {0}")]
    Stopped(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 1 verification failure, 2 usage error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification { .. } => 1,
            CliError::Stopped(_) => 3,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) | CliError::Usage(_) | CliError::Io { .. } | CliError::Json(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
