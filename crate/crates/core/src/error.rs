use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A guard tripped before the quantity was resolved.
    #[error("budget exceeded: {what} at level {level} (limit {limit})")]
    BudgetExceeded { what: String, level: u32, limit: u64 },

    #[error("only {found} marks present, need {needed}")]
    InsufficientMarks { needed: usize, found: usize },

    #[error("set touches an incomplete block at position {0}")]
    IncompleteBlock(i64),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
