use thiserror::Error;

/// Errors raised by the discretization, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum DpgError {
    #[error("unsupported quadrature degree {degree} (supported: 0..={max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("degenerate element {elem} (jacobian determinant {det:e})")]
    DegenerateElement { elem: usize, det: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("load function returned a non-finite value at ({x}, {y})")]
    LoadEvaluation { x: f64, y: f64 },

    #[error("singular system: {reason}")]
    Singular {
        reason: String,
        /// Approximate null vector, when one was identified.
        null_vector: Option<Vec<f64>>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DpgError {
    pub fn is_singular(&self) -> bool {
        matches!(self, DpgError::Singular { .. })
    }
}

pub type Result<T> = std::result::Result<T, DpgError>;
