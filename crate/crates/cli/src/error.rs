//! Failure taxonomy for the binary, mapped onto process exit codes.

use std::io;

use thiserror::Error;
use vpal_core::problems::ProblemError;
use vpal_core::regselect::SelectError;
use vpal_core::solver::SolverError;

/// Anything a command can fail with. Exit codes: 2 for configuration
/// mistakes, 3 for a failed bracket search, 1 for everything else.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Problem(_) => 2,
            CliError::Select(SelectError::BadConfig(_)) => 2,
            CliError::Select(SelectError::BracketFailure { .. }) => 3,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Problem(_) => "problem",
            CliError::Solver(_) => "solver",
            CliError::Select(SelectError::BracketFailure { .. }) => "bracket_failure",
            CliError::Select(_) => "selection",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "io",
            CliError::Runtime(_) => "runtime",
        }
    }

    /// One-line JSON for standard error, so scripts can parse failures.
    pub fn stderr_line(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
        })
        .to_string()
    }
}
