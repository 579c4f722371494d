use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    /// A numerical failure at one grid point, with the point spelled out.
    #[error("numerical failure {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: spinflip_core::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// Attach the grid point to a core error. Domain errors mean the
    /// parameters themselves are invalid, which is a configuration problem.
    pub fn at(context: impl Into<String>, source: spinflip_core::Error) -> Self {
        let context = context.into();
        match source {
            spinflip_core::Error::Domain(msg) => Self::Config(format!("{context}: {msg}")),
            source => Self::Numerical { context, source },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 1,
            Self::Numerical { .. } => 2,
            Self::Verification(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
