use thiserror::Error;

use crate::polarization::{Context, Outcome, Setting};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state is not normalized (squared norm {norm_sqr})")]
    Unnormalized { norm_sqr: f64 },

    #[error("state has a non-finite amplitude at index {index}")]
    NonFinite { index: usize },

    #[error("outcome {outcome} cannot result from a {setting} measurement")]
    InconsistentOutcome { setting: Setting, outcome: Outcome },

    #[error("invalid context {0:?}; expected one of xxx, xxy, xyx, xyy, yxx, yxy, yyx, yyy")]
    InvalidContext(String),

    #[error("invalid outcome token {0:?}; expected one of H', V', R, L")]
    InvalidOutcome(String),

    #[error("invalid sheet: {0}")]
    InvalidSheet(String),

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("tally has no runs for Mermin context {0}")]
    MissingContext(Context),
}

pub type Result<T> = std::result::Result<T, Error>;
