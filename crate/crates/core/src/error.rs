use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model, measure or schedule violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A requested computation exceeds a resource guard (lattice size, enumeration depth, node count).
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// Quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Tolerance(String),
    /// Input data is malformed or out of domain.
    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
