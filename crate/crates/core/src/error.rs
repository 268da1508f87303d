use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameters or configuration, detected before any computation.
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator left its tolerance envelope.
    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// A scripted protocol could not be carried out.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) | Error::Integration { .. } | Error::Protocol(_) => 3,
            Error::Io(_) | Error::Csv(_) => 4,
        }
    }
}
