use thiserror::Error;

#[derive(Debug, Error)]
pub enum QkdError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subsystem dims {dims:?} do not factor dimension {dim}")]
    ShapeError { dims: Vec<usize>, dim: usize },
    #[error("dimension {0} exceeds capacity {1}")]
    Capacity(usize, usize),
    #[error("vector is not normalized (norm = {0})")]
    NotNormalized(f64),
    #[error("matrix is not a valid density operator: {0}")]
    NotDensity(String),
    #[error("matrix is not unitary (max |U\u{2020}U - I| = {0:.3e})")]
    NotUnitary(f64),
    #[error("parameter `{field}` out of range: {message}")]
    InvalidParameter { field: String, message: String },
    #[error("cannot decode a bit from a NoClick outcome; sifting must exclude it")]
    NoClickDecode,
    #[error("Fock sector {0} exceeds configured n_max {1}")]
    SectorTooLarge(usize, usize),
}

pub type Result<T> = std::result::Result<T, QkdError>;

impl QkdError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        QkdError::InvalidParameter {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
