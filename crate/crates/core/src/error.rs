use thiserror::Error;

/// Errors raised by the spectral core and the experiments built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScbfError {
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter regime not covered: {0}")]
    ConditionNotMet(String),

    #[error("solution blew up at t = {t}: |u|_H = {norm:e}")]
    BlowUp { t: f64, norm: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("grid too large for oracle: n_modes = {0} (limit 8)")]
    GridTooLarge(usize),

    #[error("stationary solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("wrong noise variant: {0}")]
    WrongNoiseVariant(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for ScbfError {
    fn from(e: std::io::Error) -> Self {
        ScbfError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ScbfError>;
