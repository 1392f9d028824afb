use std::fmt;

/// CLI failure with its process exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, malformed input files, out-of-domain parameters.
    Usage(String),
    /// Divergent or non-convergent numerics.
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ugat::Error> for CliError {
    fn from(e: ugat::Error) -> Self {
        use ugat::Error::*;
        let msg = e.to_string();
        match e {
            NonConvergent { .. }
            | DivergentParameters(_)
            | DidNotConverge { .. }
            | SingularInformation
            | OutOfTabulatedRange { .. } => CliError::Numeric(msg),
            _ => CliError::Usage(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
