use thiserror::Error;

pub type Result<T> = std::result::Result<T, QrmError>;

#[derive(Debug, Error)]
pub enum QrmError {
    #[error("Fock cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error("Hilbert space mismatch: cutoff {left} vs cutoff {right}")]
    SpaceMismatch { left: usize, right: usize },

    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("state is not normalized: norm = {0}")]
    NotNormalized(f64),

    #[error("unknown operator kind '{0}'")]
    UnknownOperatorKind(String),

    #[error("operator is not Hermitian: max |M - M^dag| = {0:e}")]
    NotHermitian(f64),

    #[error("sideband Rabi strengths must be equal for the effective model (omega_r = {omega_r}, omega_b = {omega_b})")]
    UnequalSidebandStrengths { omega_r: f64, omega_b: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("non-finite amplitudes at t = {time:e} s")]
    NonFinite { time: f64 },

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}
