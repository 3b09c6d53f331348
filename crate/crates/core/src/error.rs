use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed file: {0}")]
    Format(String),

    /// The solver lost numerical control (singular basis, pivot limit).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
