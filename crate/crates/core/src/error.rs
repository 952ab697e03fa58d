use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input values: nonpositive dimensions, gains outside [-1, 1], mismatched keys.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown {kind} `{id}`")]
    Lookup { kind: &'static str, id: String },

    /// A state left the admissible domain of the pressure law.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Grid or time step configuration that cannot be realised.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("scheduling error: {0}")]
    Schedule(String),

    /// Steps were fed out of order (direct difference mode).
    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
