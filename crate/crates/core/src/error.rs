use thiserror::Error;

/// Errors raised by model construction, simulation and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its type invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Time integration could not continue.
    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    /// A root could not be bracketed or refined.
    #[error("root finding failed on [{lo}, {hi}]: {reason}")]
    RootFinding { lo: f64, hi: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
