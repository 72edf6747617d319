use thiserror::Error;

/// Errors raised by the G-operator workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GopError {
    #[error("zero covector: the zero section is excluded from T*_0 M")]
    ZeroCovector,
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("trajectory reached |p| = {norm:e} < 1e-8 at t = {time}")]
    Singularity { time: f64, norm: f64 },
    #[error("generating-function Newton solve failed after {iterations} iterations (residual {residual:e}); transformation too far from the identity")]
    Caustic { iterations: usize, residual: f64 },
    #[error(
        "operator is numerically singular: smallest singular value {sigma_min:e} below {floor:e}"
    )]
    Conditioning { sigma_min: f64, floor: f64 },
    #[error("support overflow: group element {element} outside the window ±{window}")]
    Truncation { element: i64, window: i64 },
    #[error("symbol inversion failed: residual {residual:e} above tolerance {tol:e}")]
    InversionFailure { residual: f64, tol: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GopError {
    fn from(e: std::io::Error) -> Self {
        GopError::Io(e.to_string())
    }
}

pub type Result<T, E = GopError> = std::result::Result<T, E>;
