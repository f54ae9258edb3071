//! Error type shared by all modules.

/// Errors produced by geometry construction, integration, and sampling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A point left the coordinate chart of a model.
    #[error("point outside chart domain: {0}")]
    OutsideChart(String),
    /// An operation precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The ODE integrator failed (step-size underflow, step budget).
    #[error("integration failure: {0}")]
    Integration(String),
    /// A rejection sampler exceeded its retry budget.
    #[error("sampling failure: {0}")]
    Sampling(String),
    /// A numeric procedure failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Mismatched dimensions between caller data and a model/spec.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Malformed input file (Carnot structure constants, configs).
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
