use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] jtsupport_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{skipped} point(s) skipped for exceeding the subset budget")]
    BudgetSkipped { skipped: usize },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 2 parameter, 3 budget, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(jtsupport_core::Error::Budget { .. }) | Self::BudgetSkipped { .. } => 3,
            Self::Core(_) | Self::Config(_) => 2,
            // A malformed config file is a parameter problem, not an I/O one.
            Self::Json { source, .. } if !source.is_io() => 2,
            Self::Io { .. } | Self::Json { .. } | Self::Csv { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
