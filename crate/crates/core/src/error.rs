use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),

    #[error("no IMU samples to integrate")]
    EmptyInput,

    #[error("timestamps must be strictly increasing (index {index})")]
    NonMonotone { index: usize },

    #[error("invalid scenario: {field}: {reason}")]
    Scenario { field: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("alignment needs at least 3 matched pairs, got {0}")]
    TooFewPairs(usize),

    #[error("degenerate alignment geometry: {0}")]
    Degenerate(&'static str),

    #[error("baseline RMSE must be positive, got {0}")]
    ZeroBaseline(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite3(v: &crate::Vec3, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
