use thiserror::Error;

/// Failures surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] geopeg::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 for configuration problems, 4 for numeric failures, 3 for
    /// everything involving data, files or formats.
    pub fn exit_code(&self) -> i32 {
        use geopeg::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::InvalidClearance(_) => EXIT_CONFIG,
                E::NonFiniteLoss { .. } | E::DegenerateInput(_) => EXIT_NUMERIC,
                E::Format(_)
                | E::DimensionMismatch(_)
                | E::ExpertFailure(_)
                | E::EpisodeFinished
                | E::Io(_) => EXIT_DATA,
            },
        }
    }
}
