use fdon_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
            Self::Numerical(_) => 4,
            Self::Data(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Io { .. }
            | CoreError::BadMagic { .. }
            | CoreError::Version { .. }
            | CoreError::Truncated { .. }
            | CoreError::Csv(_) => Self::Io(msg),
            CoreError::NonFinite(_) | CoreError::Solver(_) => Self::Numerical(msg),
            CoreError::Contract(_) => Self::Config(msg),
            CoreError::Dimension { .. } => Self::Data(msg),
        }
    }
}
