use std::path::PathBuf;

use crate::nn::RnnParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("loss mask has no observations")]
    DegenerateMask,

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    /// Training produced a non-finite loss. The last parameter snapshot
    /// with a finite validation loss is kept so callers can recover.
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged {
        epoch: usize,
        last_good: Box<RnnParams>,
    },

    #[error("grid search failed: every candidate produced a non-finite objective")]
    SearchFailed,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("correlation undefined for a constant series")]
    UndefinedCorrelation,

    /// R² needs observation variance. Bias and RMSE are still well defined
    /// and carried here.
    #[error("r2 undefined: observations have zero variance (n={n}, bias={bias}, rmse={rmse})")]
    UndefinedR2 { bias: f64, rmse: f64, n: usize },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end. Codes are grouped by
    /// error category so scripts can tell user mistakes from numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } => 3,
            Error::Io { .. } => 4,
            Error::InvalidInput(_)
            | Error::Dimension { .. }
            | Error::Split(_)
            | Error::Alignment(_) => 5,
            Error::DegenerateMask
            | Error::NumericOverflow(_)
            | Error::TrainingDiverged { .. }
            | Error::SearchFailed => 6,
            Error::UndefinedCorrelation | Error::UndefinedR2 { .. } | Error::Evaluation(_) => 7,
        }
    }
}
