use thiserror::Error;

/// Errors raised while configuring, loading or optimizing.
///
/// Each variant maps onto a stable process exit code, see [`DcaError::exit_code`].
#[derive(Debug, Error)]
pub enum DcaError {
    /// Invalid parameters, unknown attribute names, malformed config files.
    #[error("config: {0}")]
    Config(String),
    /// Problems with the records themselves: non-numeric cells, values out of range, empty tables.
    #[error("data: {0}")]
    Data(String),
    /// A constraint or target that cannot be met.
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl DcaError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self::Data(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Self::Infeasible(msg.into())
    }

    /// 2 config, 3 data (and I/O), 4 infeasible.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) | Self::Io(_) => 3,
            Self::Infeasible(_) => 4,
        }
    }

    /// Short machine-parsable category tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Data(_) => "data",
            Self::Infeasible(_) => "infeasible",
            Self::Io(_) => "io",
        }
    }
}

pub type Result<T, E = DcaError> = std::result::Result<T, E>;
