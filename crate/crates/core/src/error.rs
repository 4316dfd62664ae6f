use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("percept index {index} out of range (network has {count} percepts)")]
    PerceptOutOfRange { index: usize, count: usize },

    #[error("action index {index} out of range (network has {count} actions)")]
    ActionOutOfRange { index: usize, count: usize },

    #[error("reward must be non-negative, got {0}")]
    NegativeReward(f64),

    #[error("episode already finished; reset the environment first")]
    EpisodeFinished,

    #[error("goal is unreachable from the start cell")]
    Unreachable,

    #[error("state (x = {x}, v = {v}) lies outside the bounded state space")]
    StateOutOfBounds { x: f64, v: f64 },

    #[error("maze layout: {0}")]
    Layout(String),

    #[error("baseline strategy did not reach the goal within {0} steps")]
    BaselineDidNotFinish(usize),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
