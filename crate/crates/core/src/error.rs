use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("argument `{name}` = {value} outside domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: String,
    },

    #[error("operation requires {0}")]
    WrongRegime(&'static str),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite dynamics at t = {t}")]
    NonFinite { t: f64 },

    #[error("component {component} clipped by {amount:e} at t = {t}, exceeding the clamp limit")]
    ClampExceeded { component: usize, amount: f64, t: f64 },

    #[error("step budget of {0} steps exhausted")]
    StepLimit(usize),

    #[error("residual does not bracket a root on [{lo}, {hi}] (signs {f_lo:e}, {f_hi:e})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("tolerance not reached within {0} iterations")]
    IterationCap(usize),

    #[error("return function audit failed: {0}")]
    AuditFailed(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
