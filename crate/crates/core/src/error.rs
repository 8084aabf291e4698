use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported envelope: {0}")]
    UnsupportedEnvelope(String),

    #[error("out of range: {0}")]
    Range(String),

    /// The requested quantity has no definition for these inputs
    /// (e.g. work for an off-resonant drive).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A closure relation that must hold exactly was violated beyond tolerance.
    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("pulse bandwidth exceeds bath window: {0}")]
    Bandwidth(String),

    #[error("outside validity window: {0}")]
    Validity(String),

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that stem from user-provided configuration rather
    /// than from numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_)
                | Error::DegenerateInput(_)
                | Error::Config(_)
                | Error::UnsupportedEnvelope(_)
                | Error::Range(_)
                | Error::Usage(_)
                | Error::Bandwidth(_)
        )
    }
}
