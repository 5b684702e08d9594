use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("invalid connection: {0}")]
    InvalidConnection(String),
    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),
    #[error("chirality mismatch: {0}")]
    ChiralityMismatch(String),
    #[error("algebra `{0}` has no matrix representation")]
    MissingMatrixRep(String),
    #[error("singular matrix in {0}")]
    Singular(String),
    #[error("logarithm undefined: {0}")]
    LogUndefined(String),
    #[error("curvature-form hypothesis fails: {0}")]
    CurvatureHypothesis(String),
    #[error("variation curve does not vanish at the endpoints ({0})")]
    Endpoint(String),
    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),
    #[error("cannot recover velocity from momentum: {0}")]
    MomentumInversion(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
