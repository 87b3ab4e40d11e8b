use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything the library can fail with.
///
/// Variants fall in three families that the CLI maps onto exit codes:
/// input problems (`Input`, `Io`), bad arguments (`InvalidArgument`),
/// and numerical failures (`RankDeficient`, `NonConvergence`,
/// `InsufficientData`, `Numerical`).
#[derive(Debug, Error)]
pub enum Error {
    /// A record failed to parse or validate. `line` is 1-based.
    #[error("{source_name}:{line}: field `{field}`: {message}")]
    Input {
        source_name: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("design matrix is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn input(
        source_name: &str,
        line: usize,
        field: &str,
        message: impl Into<String>,
    ) -> Self {
        Error::Input {
            source_name: source_name.to_owned(),
            line,
            field: field.to_owned(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the estimation machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::NonConvergence { .. }
                | Error::InsufficientData(_)
                | Error::Numerical(_)
        )
    }
}
