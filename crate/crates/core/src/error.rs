use thiserror::Error;

use crate::group::Element;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("element {element:?} is not a valid element of {group}")]
    KindMismatch { element: Element, group: String },

    #[error("distributions live in different groups ({left} vs {right})")]
    GroupMismatch { left: String, right: String },

    #[error("integer overflow while multiplying in {0}")]
    Overflow(String),

    #[error("invalid group specification `{spec}`: {reason}")]
    GroupSpec { spec: String, reason: String },

    #[error("invalid cayley table: {0}")]
    CayleyTable(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty list of step distributions")]
    EmptySteps,

    #[error("element {0:?} lies outside the evaluation window of the set predicate")]
    WindowEscape(Element),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unpartitionable walk: rho^{{1/(2^{{k+1}}-1)}} > p0 ({detail})")]
    Unpartitionable { detail: String },

    #[error("certificate rejected: {0}")]
    CertificateRejected(String),

    #[error("search cap exceeded: {0}")]
    CapExceeded(String),

    #[error("malformed json: {0}")]
    Json(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
