use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what}: argument {value} outside supported domain")]
    Domain { what: &'static str, value: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("evaluation points closer than {0:e}")]
    CoincidentPoints(f64),

    #[error("eigenvalue {value} outside the contraction band; quadrature unconverged")]
    SpectrumOutOfRange { value: f64 },

    #[error("certificate failed: {0}")]
    Certificate(String),

    #[error("series truncation not controlled: {0}")]
    Truncation(String),

    #[error("matrix not skew-symmetric (defect {0:e})")]
    NotSkew(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
