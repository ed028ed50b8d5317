use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("index {name}={value} outside 1..={max}")]
    IndexOutOfRange {
        name: &'static str,
        value: usize,
        max: usize,
    },

    /// The sender or receiver has zero overlap with the resonant mode.
    #[error(
        "site {site} decoupled from mode q={mode}: S({site},{mode}) = 0, so an atom in that \
         cavity never exchanges its excitation with the resonant normal mode"
    )]
    Decoupled { site: usize, mode: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("integrator failed: {message} (achieved error {achieved:e}, requested {requested:e})")]
    NumericalFailure {
        message: String,
        achieved: f64,
        requested: f64,
    },

    #[error("density-matrix invariant violated at gt={gt}: {message}")]
    InvariantViolation { gt: f64, message: String },

    #[error("search window does not bracket the ideal schedule: {0}")]
    NonBracketingWindow(String),

    #[error(
        "optimum ({gt1}, {gt2}) lies {drift:.4} (relative) from the ideal schedule, beyond {limit}"
    )]
    OptimumDrift {
        gt1: f64,
        gt2: f64,
        drift: f64,
        limit: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
