use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("controllability matrix is numerically singular (rank {rank} < 4)")]
    Singular { rank: usize },

    #[error("infeasible tuning: observer gain l{index} = {value:e} is not positive")]
    InfeasibleTuning { index: usize, value: f64 },

    #[error("{identity} violated: max deviation {deviation:e} at ({row}, {col}) exceeds {tolerance:e}")]
    IdentityViolation { identity: &'static str, deviation: f64, row: usize, col: usize, tolerance: f64 },

    #[error("simulation diverged at t = {time} s; last state {last_state:?}")]
    Diverged { time: f64, last_state: Vec<f64> },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown preset `{0}` (expected e1, e2a, e2b or e3)")]
    UnknownPreset(String),

    #[error("window too short: {available} s after onset, need {required} s")]
    WindowTooShort { available: f64, required: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("trace csv error: {0}")]
    TraceCsv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
