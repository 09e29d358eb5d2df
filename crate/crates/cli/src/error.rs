use bohr_core::birkhoff::BirkhoffError;
use bohr_core::horseshoe::{HorseshoeError, VerifyError};
use bohr_core::symbolic::SymbolicError;
use bohr_core::toral::ToralError;
use bohr_core::weights::WeightError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or ill-formed configs, invalid parameters.
    #[error("{0}")]
    Malformed(String),
    /// A certificate or a numerical verification did not hold.
    #[error("verification failed: {0}")]
    Failed(String),
    /// A search ran out of depth or the request is outside what is supported.
    #[error("{0}")]
    Limit(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    /// Help or version output already printed.
    #[error("exit {0}")]
    Exit(u8),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Malformed(_) | CliError::Io(_) => 1,
            CliError::Failed(_) => 2,
            CliError::Limit(_) => 3,
            CliError::Exit(c) => *c,
        }
    }
}

impl From<HorseshoeError> for CliError {
    fn from(e: HorseshoeError) -> Self {
        match e {
            HorseshoeError::DepthExceeded { .. } => CliError::Limit(e.to_string()),
            HorseshoeError::CertificateFailure { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Malformed(m) => CliError::Malformed(format!("malformed certificate: {m}")),
            VerifyError::Rejected(_) => CliError::Failed(e.to_string()),
        }
    }
}

impl From<ToralError> for CliError {
    fn from(e: ToralError) -> Self {
        match e {
            ToralError::Unsupported(_) | ToralError::EnvelopeTooLoose { .. } | ToralError::TruncationExceeded { .. } => {
                CliError::Limit(e.to_string())
            }
            ToralError::Integrity(_) => CliError::Failed(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<BirkhoffError> for CliError {
    fn from(e: BirkhoffError) -> Self {
        match e {
            BirkhoffError::Horseshoe(h) => h.into(),
            BirkhoffError::Toral(t) => t.into(),
            BirkhoffError::IncompleteCertificate { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<WeightError> for CliError {
    fn from(e: WeightError) -> Self {
        match e {
            WeightError::TooLong { .. } => CliError::Limit(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<SymbolicError> for CliError {
    fn from(e: SymbolicError) -> Self {
        CliError::Malformed(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Malformed(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Malformed(format!("csv: {e}"))
    }
}
