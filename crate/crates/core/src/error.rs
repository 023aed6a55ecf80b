use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("missing coefficient c({d}, {r})")]
    MissingIndex { d: i64, r: i64 },
    #[error("no convergence in {what}: estimated error {estimate:.3e} exceeds {target:.3e}")]
    NoConvergence {
        what: &'static str,
        estimate: f64,
        target: f64,
    },
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("path passes within {distance:.3e} of a pole at {re}+{im}i")]
    PoleTooClose { re: f64, im: f64, distance: f64 },
}

impl Error {
    /// True for errors caused by bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid(_) | Error::MissingIndex { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
