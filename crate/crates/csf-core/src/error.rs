use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("extinct solution: {0}")]
    Extinct(String),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("gluing infeasible: {0}")]
    GluingInfeasible(String),
    #[error("CFL violation: dt = {dt:e} exceeds {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("embeddedness lost at t = {t}")]
    EmbeddednessLost { t: f64 },
    #[error("graphicality lost: {0}")]
    GraphicalityLost(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("region undefined: {0}")]
    RegionUndefined(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("config rejected: {0}")]
    ConfigRejected(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, CsfError>;

impl From<std::io::Error> for CsfError {
    fn from(e: std::io::Error) -> Self {
        CsfError::Io(e.to_string())
    }
}
