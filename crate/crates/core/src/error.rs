use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate rates: c1 and c2 must differ (got {0})")]
    DegenerateRates(f64),

    #[error(
        "inverse Laplace transform did not converge: worst point t = {t}, \
         estimated error {estimate:.3e} > target {target:.3e} (nodes = {nodes})"
    )]
    InversionFailure { t: f64, estimate: f64, target: f64, nodes: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
