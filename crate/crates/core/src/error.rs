use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{column}`")]
    Schema { column: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("label error at row {row}: {message} (value `{value}`)")]
    Label {
        row: usize,
        value: String,
        message: String,
    },

    #[error("imputation error: column `{column}` has no observed values")]
    Imputation { column: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("shape error: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input files in {}: expected {}", dir.display(), expected.join(", "))]
    MissingInputs { dir: PathBuf, expected: Vec<String> },

    /// A benchmark or ensemble cell failed; wraps the underlying error.
    #[error("[{feature_set} x {model}] {source}")]
    Cell {
        feature_set: String,
        model: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// Short category name, used as the prefix of CLI error messages.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Schema { .. } | Error::Parse { .. } | Error::Label { .. } => "data",
            Error::Imputation { .. } | Error::Split(_) => "preprocess",
            Error::Config(_) | Error::Argument(_) => "usage",
            Error::Statistics(_) | Error::Numeric(_) | Error::Fit(_) | Error::Shape { .. } => {
                "model"
            }
            Error::Format(_) => "format",
            Error::Io { .. } | Error::MissingInputs { .. } => "io",
            Error::Cell { source, .. } => source.category(),
        }
    }

    /// Process exit code for the category; never zero.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "usage" => 2,
            "io" => 3,
            "data" => 4,
            "preprocess" => 5,
            "model" => 6,
            "format" => 7,
            _ => 1,
        }
    }
}
