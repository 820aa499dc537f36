use thiserror::Error;

/// Errors raised by the synthesis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: String,
        found: String,
    },

    #[error("invalid problem: {0}")]
    Invalid(String),

    #[error("matrix is not Hurwitz (max real eigenvalue {max_real:e})")]
    Unstable { max_real: f64 },

    #[error("eigendecomposition too ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("Kronecker Lyapunov oracle refused: n = {n} exceeds {limit}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("LQR synthesis failed: {0}")]
    Synthesis(String),

    #[error("Cauchy matrix is near-singular: |s_i + s_j| = {gap:e} is too small")]
    NearSingularTheta { gap: f64 },

    #[error("no stabilizing gain found: {0}")]
    Stabilization(String),

    #[error("failed to parse field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
