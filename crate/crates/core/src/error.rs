//! Error type shared by all modules.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An enumeration request exceeded the configured ground-set limit.
    #[error("ground set of size {n} exceeds the enumeration limit {limit}")]
    SizeLimit { n: usize, limit: usize },

    /// A partition or subpartition violates a structural constraint.
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// Kernel arity does not match the requested integration power.
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    /// The requested integration method is not available on this backend.
    #[error("method {method} is not supported on the {backend} backend")]
    UnsupportedMethod { method: String, backend: String },

    /// A measure-theoretic precondition failed (infinite mass, bad weights, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or incomplete input data.
    #[error("input error: {0}")]
    Input(String),

    /// Too few samples for the requested statistic.
    #[error("sample shortage: needed {needed}, got {got}")]
    SampleShortage { needed: usize, got: usize },

    /// A numerical failure (divergence indicator, non-finite estimate, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}
