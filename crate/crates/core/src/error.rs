use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of range (valid: {valid})")]
    Index { index: usize, valid: String },

    #[error("point outside the kernel domain: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("search space too large: {0}")]
    Capacity(String),

    #[error("singular starting design: {0}")]
    Initialization(String),

    #[error("kernel matrix numerically singular (pivot ratio {pivot_ratio:e})")]
    Conditioning { pivot_ratio: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
