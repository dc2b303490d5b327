use thiserror::Error;

use crate::dynamics::TrajectoryRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode ({l1}, {l2}): l2 must be at least 1")]
    InvalidMode { l1: i32, l2: i32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("truncation mismatch: expected (n1={expected_n1}, n2={expected_n2}), got (n1={got_n1}, n2={got_n2})")]
    TruncationMismatch {
        expected_n1: usize,
        expected_n2: usize,
        got_n1: usize,
        got_n2: usize,
    },

    /// The state left the finite range or crossed the blow-up guard. The
    /// record holds every diagnostic collected before that point.
    #[error("divergence detected at t = {time}")]
    Divergence {
        time: f64,
        record: Box<TrajectoryRecord>,
    },

    #[error("check not applicable: {0}")]
    NotApplicable(String),

    #[error("logarithm undefined: sample {index} has nonpositive norm {value}")]
    UndefinedLog { index: usize, value: f64 },

    #[error("window too short: need at least {needed} samples, got {got}")]
    WindowTooShort { needed: usize, got: usize },

    #[error("vacuous check: {0}")]
    Vacuous(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
