use thiserror::Error;

/// Errors raised by problem construction, solvers and the spectral toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value while evaluating {term}")]
    NonFinite { term: String },

    #[error("point outside the domain of {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry `{geometry}` has no closed-form prox for `{term}`")]
    UnsupportedProx { geometry: String, term: String },

    #[error("eigensolver did not converge after {iterations} sweeps ({deflated} of {dim} eigenvalues deflated)")]
    NoConvergence { iterations: usize, deflated: usize, dim: usize },

    #[error("spectrum rejected: residual {residual:e} exceeds {limit:e}")]
    SpectrumResidual { residual: f64, limit: f64 },

    #[error("flow trajectory blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("oracle failed: {0}")]
    Oracle(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
