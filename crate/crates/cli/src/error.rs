use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] parabolic_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit status for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Fail = 1,
    InvalidInput = 2,
    ResourceLimit = 3,
}

impl CliError {
    pub fn status(&self) -> Status {
        use parabolic_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Output(_) => Status::InvalidInput,
            CliError::Core(e) => match e {
                E::NotFound { .. } | E::NoContraction { .. } | E::MaxItersExceeded { .. } => {
                    Status::ResourceLimit
                }
                E::LinearSolveFailure { .. } => Status::Fail,
                _ => Status::InvalidInput,
            },
        }
    }
}
