use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum RlspError {
    /// Malformed or out-of-contract input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The observed state has zero probability under the model.
    #[error("impossible evidence: {0}")]
    ImpossibleEvidence(String),

    /// A brute-force enumeration would exceed its trajectory budget.
    #[error("enumeration budget exceeded: {needed} trajectories > {budget}")]
    EnumerationBudget { needed: u128, budget: u128 },

    /// A metric or procedure is undefined for the given inputs.
    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RlspError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(RlspError::InvalidInput(msg.into()))
}
