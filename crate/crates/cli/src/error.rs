use std::fmt;

use elgof::ElError;

/// Exit status 2: unreadable or malformed input. 3: invalid configuration.
/// 1: the computation itself failed.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Config(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Config(_) => 3,
            Self::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Config(m) => write!(f, "invalid configuration: {m}"),
            Self::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl From<ElError> for CliError {
    fn from(e: ElError) -> Self {
        match e {
            ElError::InvalidConfig(m) => Self::Config(m),
            ElError::InvalidInput(m) | ElError::DegenerateData(m) => Self::Input(m),
            ElError::SolverFailure(m) => Self::Compute(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

/// Parses a flag value, reporting failures as configuration errors.
pub fn parse_flag<T>(flag: &str, value: &str) -> CliResult<T>
where
    T: std::str::FromStr<Err = ElError>,
{
    value
        .parse()
        .map_err(|e: ElError| CliError::Config(format!("--{flag}: {e}")))
}
