use thiserror::Error;

/// Errors raised by fitting, discretization and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Input data is malformed or violates a precondition.
    #[error("invalid input: {0}")]
    Input(String),
    /// No member of the requested family satisfies the dominance constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Short category tag used in machine-parseable messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) | Error::Input(_) => "input",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Toml(_) => "input",
            Error::Infeasible(_) => "infeasible",
            Error::Numeric(_) => "numeric",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
