use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pencil is not jointly definite")]
    NotJointlyDefinite,

    #[error("Cholesky factorization failed: definiteness margin {margin:e} is below working precision")]
    Cholesky { margin: f64 },

    #[error("eigensolver did not converge")]
    Eigen,

    #[error("eta = {eta} is within {distance:e} of the pole at {pole}")]
    PoleProximity { eta: f64, pole: f64, distance: f64 },

    #[error("instance generation failed after {attempts} attempts")]
    GenerationBudget { attempts: usize },

    #[error("local check inconclusive: {failed} of {samples} projections failed")]
    Inconclusive { failed: usize, samples: usize },

    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
