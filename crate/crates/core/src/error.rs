use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry {l1}x{l2}: both dimensions must be even and at least 2")]
    Geometry { l1: usize, l2: usize },
    #[error("geometry mismatch: {0} vs {1}")]
    GeometryMismatch(String, String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("state space too large: {sites} sites exceeds the enumeration cap of {cap}")]
    TooLarge { sites: usize, cap: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
