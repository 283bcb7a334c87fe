use thiserror::Error;

use crate::scenario::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weights must be positive and sum to 1 (sum {sum})")]
    InvalidWeights { sum: f64 },

    #[error("{what} = {value} is outside [0, 1]")]
    OutOfUnitRange { what: String, value: f64 },

    #[error("time interval must be non-negative (got {0})")]
    NegativeDuration(f64),

    #[error("unknown RAT `{0}`")]
    UnknownRat(String),

    #[error("no survival entry for {component} {from} -> {to}")]
    MissingSurvival {
        component: &'static str,
        from: String,
        to: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parallel composition needs at least one active link")]
    EmptyLinkSet,

    #[error("flow `{flow}` is assigned to inactive link `{rat}`")]
    FlowOnInactiveLink { flow: String, rat: String },

    #[error("scenario has {} diagnostic(s)", .0.len())]
    Scenario(Vec<Diagnostic>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
