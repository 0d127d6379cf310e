use std::fmt;

use condguide::io::FormatError;

/// Exit-code category of a failed invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Bad flags, missing required inputs, contradictory options.
    Usage,
    /// A file or directory could not be read or written.
    Io,
    /// Inputs were readable but their content is invalid for the operation.
    Data,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 1,
            Category::Io => 2,
            Category::Data => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            category: Category::Usage,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            category: Category::Io,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            category: Category::Data,
            message: message.into(),
        }
    }

    /// Prefixes the message with `context: `.
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

impl std::error::Error for CliError {}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io { .. } => CliError::io(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<condguide::Error> for CliError {
    fn from(e: condguide::Error) -> Self {
        match e {
            condguide::Error::Format(f) => f.into(),
            other => CliError::data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
