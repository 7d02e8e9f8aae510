//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Model validation failed (non-positive rate, empty batch list, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A state-phase pair outside the state space was supplied.
    #[error("state ({n},{s}) is outside the state space for k={k}")]
    InvalidState { n: u64, s: u32, k: u32 },

    /// A series truncation-error estimate exceeded the configured tolerance.
    /// Carries the estimate so callers can enlarge the cutoffs and retry.
    #[error("truncation tail estimate {estimate:.3e} exceeds tolerance {tolerance:.3e} for {quantity}; raise h_max/n_max")]
    TruncationTail {
        quantity: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    /// A quadrature integrand evaluated to a non-finite value.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// Mittag-Leffler argument beyond the configured evaluation cap.
    #[error("Mittag-Leffler argument |z|={z:.3} exceeds evaluation cap {cap}")]
    MittagLefflerCap { z: f64, cap: f64 },

    /// Mittag-Leffler series failed to converge within the term budget.
    #[error("Mittag-Leffler series did not converge within {terms} terms")]
    MittagLefflerDiverged { terms: usize },

    /// Probability mass leaked past the CTMC truncation cap.
    #[error("probability leak {leak:.3e} exceeds 1e-6 at phase cap {cap}; raise the cap")]
    PhaseCapLeak { leak: f64, cap: usize },

    /// Error attributed to a specific point of a time grid.
    #[error("at grid index {index} (t={t}): {source}")]
    AtGridIndex {
        index: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    /// Invalid run configuration (CLI layer).
    #[error("config error: {0}")]
    Config(String),

    /// Numerical inconsistency that should not occur for valid inputs.
    #[error("numerical inconsistency: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the grid position it occurred at.
    pub fn at_grid_index(self, index: usize, t: f64) -> Error {
        Error::AtGridIndex {
            index,
            t,
            source: Box::new(self),
        }
    }
}
