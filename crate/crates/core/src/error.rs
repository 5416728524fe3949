use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid maze: {0}")]
    InvalidMaze(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("target policy has zero probability at state {state}, action {action} where the learner has support")]
    SupportViolation { state: usize, action: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("malformed csv ({path}): {msg}")]
    Csv { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
