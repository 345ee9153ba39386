//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside its admissible range.
    #[error("invalid model parameter: {0}")]
    InvalidParams(String),

    /// A sampler, estimator, quadrature or scenario setting is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive quadrature hit its node cap before reaching the tolerance.
    #[error(
        "quadrature did not converge: estimated error {est_abs_error:.3e} > tolerance {tolerance:.3e} after {nodes} nodes"
    )]
    QuadratureNotConverged {
        nodes: usize,
        est_abs_error: f64,
        tolerance: f64,
    },

    /// The data (or the configuration) carries no information about the shift.
    #[error("parameter not identifiable: {0}")]
    NotIdentifiable(String),

    #[error("no two-photon events")]
    NoTwoPhotonEvents,

    #[error("{failed} of {repetitions} Monte-Carlo repetitions failed (more than 1%)")]
    TooManyFailures { failed: usize, repetitions: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors raised by a numerical procedure rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        if let Error::Context { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::NotIdentifiable(_)
                | Error::NoTwoPhotonEvents
                | Error::TooManyFailures { .. }
        )
    }
}
