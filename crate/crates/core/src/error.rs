use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a {expected}-domain function, got {found}-domain")]
    WrongDomain {
        expected: &'static str,
        found: &'static str,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too coarse: {reason}; need at least N = {required_points}")]
    GridTooCoarse {
        reason: String,
        required_points: usize,
    },

    #[error("aliasing guard: {0}")]
    Aliasing(String),

    #[error("tail mass {mass:.3e} exceeds limit {limit:.1e}")]
    TailMass { mass: f64, limit: f64 },

    #[error("modulation exceeds the grid band; largest admissible K is {max_k}")]
    ModulationTooHigh { max_k: usize },

    #[error("frequency support violation: {0}")]
    SupportViolation(String),

    #[error("cube family is empty")]
    EmptyFamily,

    #[error("cube family: {0}")]
    FamilyShape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("symbol not certified: {0}")]
    Uncertified(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("wall-clock budget of {budget_secs} s exceeded")]
    BudgetExceeded { budget_secs: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
