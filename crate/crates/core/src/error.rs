use alloc::string::String;

use crate::problem::Sample;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("numerical failure in {context}")]
    NumericalFailure { context: String, sample: Option<Sample> },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("matrix is numerically rank deficient (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("merit parameter collapsed to {tau:e}")]
    MeritCollapse { tau: f64 },
    #[error("line search failed: step size fell below {alpha_min:e}")]
    LineSearchFailure { alpha_min: f64 },
    #[error("precondition violated: {0}")]
    Contract(&'static str),
}

impl Error {
    pub(crate) fn numerical(context: impl Into<String>) -> Self {
        Error::NumericalFailure { context: context.into(), sample: None }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
