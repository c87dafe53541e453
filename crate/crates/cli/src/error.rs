use std::io;
use std::path::Path;

use pcurve_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}{}: {message}", line.map(|l| format!(": line {l}")).unwrap_or_default())]
    Schema {
        origin: String,
        line: Option<usize>,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("failure budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn input(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }

    /// 2 for bad configuration or input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Config(_) | CliError::Input { .. } => 2,
            CliError::Io { .. } => 1,
            CliError::Budget(_) => 3,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::Domain { .. } => 2,
                _ => 3,
            },
        }
    }
}
