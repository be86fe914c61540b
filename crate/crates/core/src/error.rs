use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// `P` lost symmetry beyond tolerance; the state was re-symmetrized before this was raised.
    #[error("numeric drift: relative asymmetry {asymmetry:e} of P exceeds {tolerance:e}")]
    NumericDrift { asymmetry: f64, tolerance: f64 },

    #[error("integration diverged at t = {t}: state norm {norm}")]
    Divergence { t: f64, norm: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} has a non-finite entry at flat index {pos}"
        )));
    }
    Ok(())
}
