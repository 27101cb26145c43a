use std::fmt::Display;

use relaxed_tikhonov::Error;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn parse(msg: impl Display) -> Self {
        Self { code: EXIT_PARSE, msg: msg.to_string() }
    }

    pub fn failure(msg: impl Display) -> Self {
        Self { code: EXIT_FAILURE, msg: msg.to_string() }
    }

    /// Non-finite iterates mean the solver diverged.
    pub fn solver(e: Error) -> Self {
        match e {
            Error::NonFinite(m) => Self { code: EXIT_DIVERGED, msg: format!("solver diverged: {m}") },
            other => Self::failure(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait InputContext<T> {
    /// Errors while reading or validating user input exit with code 2.
    fn input(self, what: &str) -> CliResult<T>;
}

impl<T, E: Display> InputContext<T> for Result<T, E> {
    fn input(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::parse(format!("{what}: {e}")))
    }
}

pub trait SolverContext<T> {
    fn solver(self) -> CliResult<T>;
}

impl<T> SolverContext<T> for Result<T, Error> {
    fn solver(self) -> CliResult<T> {
        self.map_err(CliError::solver)
    }
}
