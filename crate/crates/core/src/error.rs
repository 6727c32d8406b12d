use crate::domain::{FeasibilityReport, RequestId};
use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into input/validation problems (bad files, bad
/// configuration, data that cannot be fitted) and internal failures.
#[derive(Debug, Error)]
pub enum DvrpError {
    #[error("unknown request id {0}")]
    UnknownRequest(RequestId),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("rank-deficient design; collinear features: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(FeasibilityReport),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DvrpError {
    /// True for errors caused by user input rather than by the library.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            DvrpError::UnknownRequest(_)
                | DvrpError::InvalidInstance(_)
                | DvrpError::Parse { .. }
                | DvrpError::Config(_)
                | DvrpError::RankDeficient(_)
                | DvrpError::InsufficientData(_)
        )
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        DvrpError::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, DvrpError>;
