use std::path::PathBuf;

use timechange_core::Error as CoreError;

/// Exit status for a passing run.
pub const EXIT_PASS: i32 = 0;
/// Exit status when at least one validation record fails.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit status for malformed invocations and configurations.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for numerical and runtime failures.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad invocation or configuration; the message names the field.
    #[error("{0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot serialize {what}: {message}")]
    Serialize { what: &'static str, message: String },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    /// Error for a configuration field: `field: message`.
    pub fn field(field: &str, msg: impl std::fmt::Display) -> Self {
        Self::Usage(format!("{field}: {msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Core { source, .. } => match source {
                CoreError::Domain { .. } | CoreError::Config(_) | CoreError::Precondition(_) => EXIT_USAGE,
                CoreError::Numeric { .. } | CoreError::Runtime(_) => EXIT_NUMERIC,
            },
            Self::Io { .. } | Self::Serialize { .. } => EXIT_NUMERIC,
        }
    }
}

/// Wraps a core error with the operation that raised it.
pub fn context(what: &str) -> impl Fn(CoreError) -> CliError + '_ {
    move |source| CliError::Core { context: what.to_string(), source }
}
