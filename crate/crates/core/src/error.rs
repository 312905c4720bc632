use std::path::PathBuf;

use crate::circuit::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter `{0}` is referenced by the circuit but not bound")]
    UnboundParameter(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient fringes: {0}")]
    InsufficientFringes(String),

    #[error("ambiguous period: spectral peak {peak:.6e} is less than 3x the next peak {next:.6e}")]
    AmbiguousPeriod { peak: f64, next: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    TraceFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the fringe analysis stage, as opposed to bad
    /// inputs or I/O.
    pub fn is_analysis(&self) -> bool {
        matches!(
            self,
            Error::InsufficientFringes(_) | Error::AmbiguousPeriod { .. }
        )
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}
