use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid subsystem index {index} for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("ket is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("state trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("state is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("PPT input: no PPT witness; supply witness explicitly")]
    PptInput,

    #[error("unsupported local dimension {0}: the Pauli projector family needs a power of two")]
    UnsupportedDimension(usize),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("signaling detected in probability table (deviation {deviation:.3e})")]
    Signaling { deviation: f64 },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
