use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index-order violation: {0}")]
    IndexOrder(String),

    #[error("index out of range: {0}")]
    IndexRange(String),

    #[error("duplicate term: {0}")]
    Duplicate(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("unknown ansatz class: {0}")]
    UnknownClass(String),

    #[error("unsupported moment order t={0} (supported: 1, 2)")]
    UnsupportedT(u32),

    #[error("condition unmet: {0}")]
    ConditionUnmet(String),

    #[error("unsupported ansatz: {0}")]
    Unsupported(String),

    #[error("resource bound: {0}")]
    ResourceBound(String),

    #[error("support left the paired subspace at rotation {0}")]
    SupportViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
