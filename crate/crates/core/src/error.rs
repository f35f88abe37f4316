use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A row in an input artifact could not be parsed. `line` is 1-based and
    /// counts the header.
    #[error("line {line} (row {row}): field `{field}`: {message}")]
    Parse {
        line: usize,
        row: usize,
        field: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("accuracy {value} is outside the domain of the {scaling} scaling")]
    Domain { value: f64, scaling: &'static str },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown {kind} `{name}` (valid: {valid})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("{0}")]
    Empty(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("report stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, row: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            row,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
