use std::path::PathBuf;

use qkernel_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(#[source] CoreError),

    #[error("numerical failure{}: {source}", .layers.map(|l| format!(" at L={l}")).unwrap_or_default())]
    Numerical {
        layers: Option<usize>,
        #[source]
        source: CoreError,
    },

    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Output { .. } => 3,
            CliError::Numerical { .. } => 4,
        }
    }

    pub(crate) fn output(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    pub(crate) fn at_layers(layers: usize) -> impl Fn(CoreError) -> CliError {
        move |source| CliError::Numerical {
            layers: Some(layers),
            source,
        }
    }
}

/// Ingestion problems map to the data exit code, everything else to numerical.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io { .. }
            | CoreError::BadMagic { .. }
            | CoreError::Truncated { .. }
            | CoreError::CountMismatch { .. }
            | CoreError::EmptySelection { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::InsufficientData { .. }
            | CoreError::OddBalancedSplit { .. }
            | CoreError::LabelOutOfRange { .. }
            | CoreError::NonBinaryLabel { .. } => CliError::Data(e),
            other => CliError::Numerical {
                layers: None,
                source: other,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
