use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix must have dimension at least 1")]
    Empty,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max |A_ij - conj(A_ji)| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("eigensolver did not converge on {dim}x{dim} matrix `{label}`")]
    EigenNoConvergence { dim: usize, label: String },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource budget exceeded: {what} needs {requested}, limit is {limit}")]
    Resource {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{what} did not converge; estimates: {table:?}")]
    NonConvergence { what: &'static str, table: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
