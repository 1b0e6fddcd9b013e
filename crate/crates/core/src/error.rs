use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
///
/// The variants are grouped so callers (the CLI in particular) can map them
/// onto stable exit codes with [`Error::kind`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("above threshold: pump ratio {ratio} must be < 1")]
    AboveThreshold { ratio: f64 },

    #[error("ambiguous lineshape: {0}")]
    AmbiguousLineshape(String),

    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    #[error("no spectral response at {wavelength_nm} nm (table covers {min_nm}..{max_nm} nm)")]
    MissingResponse {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("integration unstable: {0}")]
    Stability(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit did not converge after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },

    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    #[error("infeasible fit: {0}")]
    Infeasible(String),

    #[error("rank deficient design: {0}")]
    Rank(String),

    #[error("config error: {0}")]
    Config(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Stability(_) => ErrorKind::Config,
            Error::InvalidCoupling(_)
            | Error::Domain(_)
            | Error::InconsistentData(_)
            | Error::MissingResponse { .. }
            | Error::InsufficientData(_)
            | Error::Underdetermined(_)
            | Error::Infeasible(_)
            | Error::Rank(_) => ErrorKind::Data,
            Error::AboveThreshold { .. }
            | Error::AmbiguousLineshape(_)
            | Error::NoConvergence { .. } => ErrorKind::Numerical,
        }
    }
}

pub(crate) fn ensure_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} is outside [0, 1]")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} must be finite and >= 0")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} must be finite and > 0")))
    }
}
