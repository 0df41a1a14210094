use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CwlError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("degenerate dynamics: direction mapped to zero at step {step}")]
    DegenerateDynamics { step: usize },

    #[error("covariance is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("degenerate process: {0}")]
    DegenerateProcess(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("unsupported dimension d = {0}: reference exponents exist for d in 1..=5 only")]
    UnsupportedDimension(f64),

    #[error("endpoint divergence at lambda = {0}")]
    EndpointDivergence(f64),

    #[error("divergent mean: exponent {0} <= 1 has no finite mean interval")]
    DivergentMean(f64),

    #[error("collapse undefined: {0}")]
    CollapseUndefined(String),

    #[error("io error: {0}")]
    Io(String),
}

impl CwlError {
    /// True for failures of numerical routines (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CwlError::Numerical(_)
                | CwlError::Quadrature { .. }
                | CwlError::NotPsd { .. }
                | CwlError::DegenerateDynamics { .. }
                | CwlError::DegenerateProcess(_)
                | CwlError::Fit(_)
                | CwlError::CollapseUndefined(_)
        )
    }
}

impl From<std::io::Error> for CwlError {
    fn from(e: std::io::Error) -> Self {
        CwlError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CwlError>;
