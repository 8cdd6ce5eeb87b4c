use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("length mismatch: expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("degree calibration failed: no degree <= {max} passes at delta={delta}")]
    Calibration { delta: f64, max: usize },
    #[error("oracle refused: {0}")]
    Refused(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("budget exceeded: {used} > {budget}")]
    Budget { used: usize, budget: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}
