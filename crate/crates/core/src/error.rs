use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("graph integrity: {0}")]
    Graph(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is singular or not positive definite at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite gradient in parameter `{name}`")]
    GradientExplosion { name: String },

    #[error("state shape mismatch: expected {expected} rows, got {got}")]
    StateShape { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Dimension {
        op,
        detail: detail.into(),
    }
}
