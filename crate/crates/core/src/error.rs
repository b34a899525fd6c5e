use thiserror::Error;

pub type Result<T> = std::result::Result<T, MbsError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MbsError {
    /// An input lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A quantity cannot be evaluated at this point (e.g. an exact field null).
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("quadrature did not converge: estimated error {est_error:e} > tolerance {tol:e} ({context})")]
    Convergence {
        est_error: f64,
        tol: f64,
        context: String,
    },
    #[error("fit failed: {0}")]
    Fit(String),
}

impl MbsError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        MbsError::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        MbsError::Numerical(msg.into())
    }
}
