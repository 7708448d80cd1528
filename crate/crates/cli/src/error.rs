use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration text or invalid parameter values.
    #[error("{}", match .line {
        Some(line) => format!("configuration error (line {line}): {message}"),
        None => format!("configuration error: {message}"),
    })]
    Config { line: Option<usize>, message: String },

    /// The simulation or an analytic routine failed.
    #[error("numerical failure: {0}")]
    Numerical(selfrec_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file (trace or pairs CSV).
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
}

impl CliError {
    pub fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Config {
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 1 for anything the user can fix in their inputs, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl From<selfrec_core::Error> for CliError {
    fn from(err: selfrec_core::Error) -> Self {
        match err {
            selfrec_core::Error::Config(message) => CliError::Config {
                line: None,
                message,
            },
            other => CliError::Numerical(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
