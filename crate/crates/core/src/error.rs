use thiserror::Error;

use crate::numerics::QuadratureReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator fell below the singularity threshold.
    #[error("singular denominator in {context} (|denominator| = {magnitude:.3e})")]
    Singularity { context: String, magnitude: f64 },

    /// The adaptive quadrature ran out of its evaluation budget.
    #[error(
        "quadrature did not converge: partial estimate {partial:.6e}, \
         estimated relative error {:.3e} after {} evaluations",
        report.rel_error,
        report.evaluations
    )]
    Quadrature {
        partial: f64,
        report: QuadratureReport,
    },

    /// Bisection bracket without a sign change.
    #[error(
        "no sign change on [{lo:.6e}, {hi:.6e}]: f(lo) = {f_lo:.6e}, f(hi) = {f_hi:.6e}"
    )]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// The spin-flip rate vanished where it is used as a normalization.
    #[error("degenerate denominator: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
