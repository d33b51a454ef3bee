//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Variants distinguish caller
//! mistakes (bad arguments, shape mismatches) from numerical failures that
//! arise at run time (divergence, ill-conditioning, degenerate directions),
//! because callers typically want to treat the two very differently: the
//! former are bugs, the latter are data.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation
    /// (e.g. a probability outside `[0, 1]`, a non-finite input).
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument violates the documented contract of the operation
    /// (e.g. dimension mismatch, empty input, invalid configuration).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested operation is not defined for this configuration
    /// (e.g. a proximal map that has no well-defined closed or computable
    /// form for the given penalty family).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The optimizer produced a non-finite objective value. The trace of
    /// objective values up to the failure is attached for post-mortems.
    #[error("solver diverged at iteration {iteration}: objective became non-finite")]
    Diverged {
        /// Iteration index at which the objective stopped being finite.
        iteration: usize,
        /// Objective values recorded up to (not including) the failure.
        trace: Vec<f64>,
    },

    /// A matrix that must be inverted is numerically singular.
    #[error(
        "matrix is ill-conditioned: condition number {condition:.6e} exceeds the limit {limit:.1e}"
    )]
    IllConditioned {
        /// Estimated spectral condition number (ratio of extreme absolute
        /// eigenvalues).
        condition: f64,
        /// Largest condition number accepted by the operation.
        limit: f64,
    },

    /// The variance of a test statistic along the requested direction is
    /// numerically zero, so the statistic is undefined.
    #[error("degenerate direction: variance term {variance:.6e} is below {limit:.1e}")]
    DegenerateDirection {
        /// Computed variance term for the direction.
        variance: f64,
        /// Threshold below which the direction is declared degenerate.
        limit: f64,
    },

    /// Too many replications of a simulation experiment failed.
    #[error(
        "simulation failed on {failed} of {total} replications (limit {limit_percent}%); \
         first failing (n, replication) pairs: {tags:?}"
    )]
    ExperimentFailure {
        /// Number of failed replications.
        failed: usize,
        /// Total replications attempted.
        total: usize,
        /// Maximum tolerated failure percentage.
        limit_percent: u8,
        /// `(n, replication)` tags of the first few failures.
        tags: Vec<(usize, usize)>,
    },

    /// A fit inside a regularization path failed; wraps the underlying
    /// error together with the position in the path.
    #[error("fit failed at path position {index} (lambda = {lambda:.6e}): {source}")]
    PathFit {
        /// Zero-based index into the lambda sequence.
        index: usize,
        /// The lambda value at which the fit failed.
        lambda: f64,
        /// Underlying failure.
        #[source]
        source: Box<Error>,
    },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand constructor for [`Error::Domain`].
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Shorthand constructor for [`Error::InvalidArgument`].
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
