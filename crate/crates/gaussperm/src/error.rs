//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: non-square matrix where a square one is required,
    /// non-finite entries, dimension mismatches, out-of-range indices.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input is structurally fine but violates a policy precondition,
    /// e.g. a diagonal shift below the Frobenius norm without the
    /// explicit override.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A dimension or leg-count guard was exceeded.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// Cholesky hit a negative pivot beyond tolerance, or a zero pivot
    /// with unexplained mass below it.
    #[error("matrix is not positive semidefinite (pivot {pivot:.6e} at row {row})")]
    NotPsd { row: usize, pivot: f64 },

    /// Numerical failure that survived the recovery policy
    /// (e.g. Cholesky still failing after the maximum jitter).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A per-sample product left the double range.
    #[error("sample product overflowed at sample {sample_index}; reduce the matrix dimension or the diagonal shift")]
    Overflow { sample_index: u64 },

    /// Two internally redundant computations disagreed. This is a defect
    /// signal, never an input problem.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// Matrix text could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
