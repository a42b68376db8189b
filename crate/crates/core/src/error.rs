use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("depth budget exceeded: {0}")]
    DepthBudgetExceeded(String),
    #[error("digit budget exceeded: {0}")]
    DigitBudgetExceeded(String),
    #[error("cell budget exceeded: {needed} cells requested, budget {budget}")]
    CellBudgetExceeded { needed: u128, budget: u128 },
    #[error("entropy not certifiable: {0}")]
    InfeasibleEntropy(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InfeasibleEntropy(_) => 2,
            Error::DepthBudgetExceeded(_) | Error::DigitBudgetExceeded(_) | Error::CellBudgetExceeded { .. } => 3,
            Error::Certification(_) | Error::Verification(_) => 4,
            Error::Format(_) => 5,
            Error::DimensionMismatch { .. } | Error::InvalidInput(_) => 5,
        }
    }
}
