use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive frequency quadrature did not reach its target tolerance.
    #[error(
        "quadrature did not converge on [{lower}, {upper}]: error estimate {estimate:.3e} \
         exceeds target {target:.3e} after {intervals} subintervals"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        target: f64,
        intervals: usize,
    },

    /// The discretized resolvent operator is numerically singular.
    #[error("singular operator at outer time t = {time}: condition number {condition:.3e}")]
    SingularOperator { time: f64, condition: f64 },

    /// A trajectory produced a non-finite value.
    #[error("integration failed at t = {time}: non-finite state (last good state {last_good:?})")]
    Integration { time: f64, last_good: Vec<f64> },

    #[error("Hilbert space dimension {dimension} exceeds the limit {limit}")]
    DimensionOverflow { dimension: usize, limit: usize },

    /// Truncated thermal populations leave too much weight above the Fock cutoff.
    #[error("thermal tail mass {tail:.3e} of mode {mode} exceeds {limit:.1e} at the maximum cutoff")]
    TailMass { mode: usize, tail: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("eigendecomposition failed: {0}")]
    Diagonalization(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
