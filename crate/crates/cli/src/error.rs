use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Verification(_) => 4,
        })
    }
}

impl From<krnorm::Error> for CliError {
    fn from(e: krnorm::Error) -> Self {
        use krnorm::Error as E;
        match e {
            E::Infeasible(_) | E::TailTooLarge { .. } | E::EpsilonBelowFloor { .. } | E::Lp(_) => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}
