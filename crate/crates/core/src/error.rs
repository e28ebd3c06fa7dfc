//! Error type shared by all operations.

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error("step {step} exceeds declared horizon {horizon}")]
    Horizon { step: u32, horizon: u32 },

    #[error("operation requires {needed} mode")]
    UnsupportedMode { needed: &'static str },

    #[error("conditioning event has probability zero: {context}")]
    Conditioning { context: String },

    #[error("divergence support violation: first argument positive at {outcome} where second is zero")]
    Support { outcome: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("enumeration budget exhausted: {evaluated} vector evaluations exceed cap {cap}")]
    Budget { evaluated: u64, cap: u64 },

    #[error("no convergence within horizon; last bracket [{lower}, {upper}]")]
    NoConvergence { lower: String, upper: String },

    #[error("sample count must be positive")]
    ZeroSamples,

    #[error("limit bracket too loose to decide: {0}")]
    Indeterminate(String),
}
