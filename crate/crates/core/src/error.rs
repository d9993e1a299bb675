use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("player index {index} out of range for {n} players")]
    InvalidPlayer { index: usize, n: usize },

    #[error("no canonical pair for n = {n}, lambda = {lambda} (requires n >= 2 and lambda > 2 ln 2)")]
    NoCanonicalPair { n: usize, lambda: f64 },

    #[error("FPH(n = {n}, lambda = {lambda}) admits no Nash equilibrium")]
    NoEquilibrium { n: usize, lambda: f64 },

    #[error("unsupported player count n = {0}")]
    UnsupportedN(usize),

    #[error("profile is empty")]
    EmptyProfile,

    #[error("profile has {got} positions but the game has {expected} players")]
    ProfileSize { expected: usize, got: usize },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("root finder failed: {0}")]
    Solver(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
