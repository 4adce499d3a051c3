use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),

    #[error("invalid standard form: {0}")]
    InvalidStandardForm(String),

    #[error("no steering boundary with gamma in (0, 1] for alpha = {alpha}, mu = {mu}")]
    NoBoundary { alpha: f64, mu: f64 },

    #[error("observable order {order} does not fit in cutoff {cutoff} (need order <= cutoff + 1)")]
    OrderTooLarge { order: usize, cutoff: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("truncation deficit {deficit:.3e} exceeds the allowed {limit:.3e}")]
    Truncation { deficit: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    range: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { name, value, range })
    }
}
