use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid body dimensions: {0}")]
    InvalidDimensions(String),

    #[error("anthropometry out of range: {0}")]
    Anthropometry(String),

    #[error("invalid joint vector: {0}")]
    InvalidJointVector(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    /// A scenario file that does not match the schema.
    #[error("scenario load error at `{field}`: {message}")]
    Load { field: String, message: String },

    /// A scenario that parses but describes an impossible task.
    #[error("scenario validation error: {0}")]
    Validation(String),

    #[error("motion log error at row {row}: {message}")]
    Ingest { row: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("report format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn load(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Load {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad configuration or input data rather than
    /// the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
