use mvq_core::CoreError;

/// Errors surfaced by the command line, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or inconsistent configuration (exit code 2).
    #[error("config error: {0}")]
    Config(String),
    /// The scheme itself failed: blow-up, quadrature, mass drift (exit code 3).
    #[error("numerical failure: {0}")]
    Numerical(#[from] CoreError),
    /// Reading or writing files.
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(e) if is_numerical(e) => 3,
            Self::Numerical(_) => 2,
            Self::Io { .. } | Self::Format(_) => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }
}

/// Errors produced by a well-formed run rather than by its inputs.
pub fn is_numerical(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::BlowUp { .. }
            | CoreError::QuadratureFailure { .. }
            | CoreError::MassDrift { .. }
            | CoreError::NonFiniteOutput { .. }
    )
}

pub fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
