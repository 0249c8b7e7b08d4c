use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Every variant maps to a stable machine-readable name via [`Error::kind`],
/// which the CLI uses in its error JSON.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("argument outside the admissible strip: {0}")]
    StripViolation(String),
    #[error("quadrature did not reach tolerance: {0}")]
    IntegrationFailure(String),
    #[error("numeric tail behaviour is ambiguous: {0}")]
    Undecidable(String),
    #[error("complex Bessel evaluation left its validated domain: {0}")]
    BesselDomainError(String),
    #[error("density not known in closed form: {0}")]
    DensityUnknown(String),
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no root bracketed: {0}")]
    NoRoot(String),
    #[error("degenerate case: {0}")]
    DegenerateCase(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("integration region touches the origin: {0}")]
    RegionTouchesOrigin(String),
    #[error("jump of size {size} <= -1 at t = {time}")]
    JumpBelowMinusOne { time: f64, size: f64 },
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("damping strip and payoff strip do not intersect: {0}")]
    EmptyIntersection(String),
    #[error("explicit jump step unstable: {0}")]
    CflViolation(String),
    #[error("price outside no-arbitrage bounds: {0}")]
    ArbitrageViolation(String),
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::StripViolation(_) => "StripViolation",
            Error::IntegrationFailure(_) => "IntegrationFailure",
            Error::Undecidable(_) => "Undecidable",
            Error::BesselDomainError(_) => "BesselDomainError",
            Error::DensityUnknown(_) => "DensityUnknown",
            Error::ParameterMismatch(_) => "ParameterMismatch",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NoRoot(_) => "NoRoot",
            Error::DegenerateCase(_) => "DegenerateCase",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::RegionTouchesOrigin(_) => "RegionTouchesOrigin",
            Error::JumpBelowMinusOne { .. } => "JumpBelowMinusOne",
            Error::UnsupportedModel(_) => "UnsupportedModel",
            Error::EmptyIntersection(_) => "EmptyIntersection",
            Error::CflViolation(_) => "CFLViolation",
            Error::ArbitrageViolation(_) => "ArbitrageViolation",
            Error::NonConvergence(_) => "NonConvergence",
            Error::DegenerateData(_) => "DegenerateData",
            Error::ParseError { .. } => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
