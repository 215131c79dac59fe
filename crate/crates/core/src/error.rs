use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("origin excluded")]
    OriginExcluded,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("point is not on the unit sphere (|theta| = {0})")]
    NotUnit(f64),
    #[error("not in g+: {0}")]
    NotInCone(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("energy 0 is the homoclinic figure-eight level")]
    Homoclinic,
    #[error("empty level set: energy {0} does not exceed the minimum")]
    EmptyLevel(f64),
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("smoothed well audit failed: {0}")]
    WellCondition(String),
    #[error("outside the orderable regime: {0}")]
    OutOfTheory(String),
    #[error("infeasible geometry: {0}")]
    Infeasible(String),
    #[error("scan budget exceeded after {0} labels")]
    ScanBudget(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
