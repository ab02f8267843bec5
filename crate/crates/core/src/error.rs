use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch for {what}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("marginals violate assignment bounds: {0}")]
    InvalidMarginals(String),

    #[error("search space of {size} assignments exceeds the budget of {budget}")]
    SearchSpaceTooLarge { size: u128, budget: u128 },

    #[error("{realizations} display realizations exceed the enumeration budget of {budget}")]
    EnumerationBudget { realizations: u128, budget: u128 },

    #[error("no observed bids to fit the bid model")]
    NoObservedBids,

    #[error("invalid attack scenario: {0}")]
    InvalidScenario(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by a computational budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::SearchSpaceTooLarge { .. } | Error::EnumerationBudget { .. }
        )
    }
}
