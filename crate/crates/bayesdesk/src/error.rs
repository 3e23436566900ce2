use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unsupported likelihood/prior pairing: {0}")]
    Pairing(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("support truncation too tight: {0}")]
    Support(String),
    #[error("envelope bound violated at x = {x}")]
    Bound { x: f64 },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("polynomial has a root on the unit circle")]
    BoundaryRoot,
    #[error("incompatible conditionals: {0}")]
    Incompatible(String),
    #[error("no proposal accepted (acceptance rate {rate})")]
    Budget { rate: f64 },
    #[error("size guard exceeded: {0}")]
    Guard(String),
}

impl Error {
    /// True for errors caused by caller-supplied inputs, as opposed to
    /// numerical guards tripping during a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Pairing(_) | Error::Empty(_) | Error::Dimension(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
