use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("exceptional set: {0}")]
    ExceptionalSet(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("unsupported degree: {0}")]
    UnsupportedDegree(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("wedge limit: {0}")]
    WedgeLimit(String),
    #[error("degenerate chart: {0}")]
    DegenerateChart(String),
    #[error("outside chart: {0}")]
    OutsideChart(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for errors caused by malformed or inadmissible input rather than
    /// by the mathematics of a valid request.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::ContractViolation(_) | Error::Precondition(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}
