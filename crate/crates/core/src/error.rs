use std::fmt;

/// Error type shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("{context}: non-finite value encountered")]
    NonFinite { context: &'static str },

    #[error("{0}: empty input")]
    Empty(&'static str),

    #[error("loss node must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("invalid simplex point: {0}")]
    InvalidSimplex(String),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cholesky factorization failed ({0})")]
    Cholesky(CholeskyDiagnostics),

    #[error(
        "projection did not converge after {iterations} iterations (objective {objective:.6e})"
    )]
    NonConvergence {
        iterations: usize,
        objective: f64,
        last_iterate: Vec<f64>,
    },

    #[error("model has no average function; residual coefficients need use_residuals")]
    MissingAverageFunction,

    #[error("task descriptor missing or incompatible: {0}")]
    MissingDescriptor(String),

    #[error("unsupported model format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("corrupt model file: {0}")]
    Corrupt(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Conditioning details reported when a Gram matrix cannot be factored.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyDiagnostics {
    pub size: usize,
    pub ridge: f64,
    pub failed_pivot: usize,
    pub pivot_value: f64,
    pub min_diagonal: f64,
    pub max_diagonal: f64,
}

impl fmt::Display for CholeskyDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={}, ridge={:.3e}, pivot {} = {:.3e}, diag range [{:.3e}, {:.3e}]; \
             basis may be degenerate, increase the ridge",
            self.size,
            self.ridge,
            self.failed_pivot,
            self.pivot_value,
            self.min_diagonal,
            self.max_diagonal
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(context: &'static str, expected: impl fmt::Debug, actual: impl fmt::Debug) -> Error {
    Error::ShapeMismatch {
        context,
        expected: format!("{expected:?}"),
        actual: format!("{actual:?}"),
    }
}
