use thiserror::Error;

/// Everything that can go wrong between building a domain and querying a reduced model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("modal basis: {0}")]
    Basis(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver failed at mu = {mu:?}: {reason}")]
    Solver { mu: Vec<f64>, reason: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("eigensolver: {0}")]
    Eigen(String),

    #[error("inf-sup formulation: {0}")]
    Formulation(String),

    #[error("reduced basis: {0}")]
    Reduction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_mu(self, mu: &[f64]) -> Error {
        match self {
            Error::Singular(reason) | Error::Solver { reason, .. } => Error::Solver {
                mu: mu.to_vec(),
                reason,
            },
            other => other,
        }
    }
}
