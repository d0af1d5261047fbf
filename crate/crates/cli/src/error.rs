use std::fmt;
use std::process::ExitCode;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters the library rejects as preconditions. Exit 2.
    Usage(String),
    /// A check failed or input data is invalid. Exit 1.
    Failure(String),
    /// Parse errors, help and version output from clap.
    Clap(clap::Error),
}

impl CliError {
    pub fn usage(e: impl fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }

    pub fn failure(e: impl fmt::Display) -> Self {
        Self::Failure(e.to_string())
    }

    pub fn report(self) -> ExitCode {
        match self {
            Self::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Self::Failure(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
            Self::Clap(e) => {
                let _ = e.print();
                // help and version are not errors
                ExitCode::from(if e.use_stderr() { 2 } else { 0 })
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Failure(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Failure(e.to_string())
    }
}
