use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A field or coefficient vector does not match its grid.
    #[error("size mismatch: grid has {expected} nodes, got {got} values")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The nonlinear substep was asked to run past the blow-up horizon.
    #[error("step too large: tau = {tau:e} is not below the blow-up horizon {horizon:e}")]
    StepTooLarge { tau: f64, horizon: f64 },

    #[error("non-finite state: {0}")]
    NonFinite(String),

    /// The grid does not resolve an eigenvalue large enough for the request.
    #[error("grid resolution insufficient: need an eigenvalue above {required:e}, largest available is {available:e}")]
    Resolution { required: f64, available: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("decay rate undefined: {0}")]
    UndefinedRate(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
