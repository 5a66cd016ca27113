use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Missing(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 0 computed, 1 i/o, 2 config or validation, 3 object does not exist, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<candor_core::Error> for CliError {
    fn from(e: candor_core::Error) -> Self {
        use candor_core::Error as E;
        match e {
            E::Domain { .. } | E::InvalidParams(_) | E::InvalidPolicy(_) | E::Unsupported(_) => {
                CliError::Config(e.to_string())
            }
            E::NoSwitch(_) => CliError::Missing(e.to_string()),
            E::Quadrature { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
