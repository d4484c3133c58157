use std::io;
use std::path::{Path, PathBuf};

/// Failures of the harness, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: malformed file: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] kscons_core::Error),
    #[error("run diverged: {0}")]
    Diverged(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, reason: impl Into<String>) -> Self {
        HarnessError::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    /// 2 divergence, 3 configuration, 4 I/O and file formats.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Diverged(_) | HarnessError::Core(_) => 2,
            HarnessError::Config(_) | HarnessError::Validation(_) => 3,
            HarnessError::Io { .. } | HarnessError::Format { .. } => 4,
        }
    }
}
