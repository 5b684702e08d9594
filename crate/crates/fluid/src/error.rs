use thiserror::Error;

#[derive(Debug, Error)]
pub enum FluidError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field shape mismatch: {0}")]
    Shape(String),
    #[error("density reached {min_d:e} at t = {t}")]
    BlowUp { t: f64, min_d: f64 },
    #[error("non-finite field at t = {0}")]
    NonFinite(f64),
    #[error("initial velocity is not divergence-free (max |div u| = {0:e})")]
    Divergent(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Core(#[from] epsim_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FluidError>;
