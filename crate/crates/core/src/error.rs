use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain where a model is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The empirical reconstruction produced a non-physical mode index.
    #[error("model breakdown: {0}")]
    ModelBreakdown(String),
    /// A root or extremum the caller asked for does not exist in the window.
    #[error("not found: {0}")]
    NotFound(String),
    /// Inconsistent or empty configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed or tampered data file.
    #[error("data file error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by the caller's inputs rather than by a solver.
    pub fn is_domain_or_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::ModelBreakdown(_) | Error::Config(_) | Error::Data(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
