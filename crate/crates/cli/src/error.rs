use std::fmt;
use std::path::PathBuf;

/// Failure of a CLI invocation, mapped onto the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", config_message(.line, .key, .message))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ehwake::Error),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn config_message(line: &Option<usize>, key: &Option<String>, message: &str) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!("config line {l}, key `{k}`: {message}"),
        (Some(l), None) => format!("config line {l}: {message}"),
        (None, Some(k)) => format!("config key `{k}`: {message}"),
        (None, None) => format!("config: {message}"),
    }
}

impl CliError {
    pub fn config(line: Option<usize>, key: Option<&str>, message: impl fmt::Display) -> Self {
        CliError::Config {
            line,
            key: key.map(str::to_string),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            CliError::Config { line, .. } => *line,
            _ => None,
        }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            CliError::Config { key, .. } => key.as_deref(),
            _ => None,
        }
    }

    /// 1 for invalid input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        use ehwake::Error as E;
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 1,
            CliError::Model(E::Config(_) | E::Domain { .. } | E::ModelInconsistency { .. }) => 1,
            CliError::Model(_) | CliError::Io { .. } => 2,
        }
    }
}
