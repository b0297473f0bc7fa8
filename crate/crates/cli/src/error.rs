use std::fmt;

use geoground_core::data::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Validation,
    Degenerate,
    Io,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Validation => 2,
            ExitKind::Degenerate => 3,
            ExitKind::Io => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Validation,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Io,
            message: message.into(),
        }
    }

    /// Prefixes the message with `context`.
    pub fn context(mut self, context: impl fmt::Display) -> Self {
        self.message = format!("{context}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<geoground_core::Error> for CliError {
    fn from(e: geoground_core::Error) -> Self {
        Self {
            kind: if e.is_degenerate() {
                ExitKind::Degenerate
            } else {
                ExitKind::Validation
            },
            message: e.to_string(),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Core(inner) => inner.into(),
            DataError::Parse { .. } | DataError::DuplicateId { .. } | DataError::DimensionMismatch { .. } => {
                CliError::validation(e.to_string())
            }
            DataError::Io { .. }
            | DataError::Http { .. }
            | DataError::Timeout(_)
            | DataError::Transport(_)
            | DataError::Protocol(_)
            | DataError::EmbeddingDimension { .. } => CliError::io(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
