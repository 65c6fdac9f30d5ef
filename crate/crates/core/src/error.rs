use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented invariant (Hermiticity, trace, PSD, ...).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Operand dimensions do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The energy constraint admits no state.
    #[error("infeasible constraint: min eigenvalue of F is {min_eig}, bound is {bound}")]
    Infeasible { min_eig: f64, bound: f64 },

    /// The problem is larger than the dense routines are meant to handle.
    #[error("problem too large: {0}")]
    Resource(String),

    /// A computation produced a value outside its mathematical range.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The requested operation does not support this input form.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invariant(msg: impl Into<String>) -> Error {
    Error::Invariant(msg.into())
}

pub(crate) fn dimension(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
