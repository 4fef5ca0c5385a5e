use std::fmt;
use std::process::ExitCode;

use siftmatch_core::{DescriptorError, MatchError};

/// Error class reported as `error[<category>]: ...` on stderr.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Io,
    Format,
    Input,
    Config,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Io => "io",
            Category::Format => "format",
            Category::Input => "input",
            Category::Config => "config",
        }
    }

    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Category::Usage => 2,
            Category::Io => 3,
            Category::Format => 4,
            Category::Input => 5,
            Category::Config => 6,
        })
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(category: Category, error: impl Into<anyhow::Error>) -> Self {
        Self {
            category,
            error: error.into(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new(Category::Usage, anyhow::anyhow!("{message}"))
    }

    pub fn context(self, context: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            category: self.category,
            error: self.error.context(context),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {:#}", self.category.as_str(), self.error)
    }
}

impl From<DescriptorError> for CliError {
    fn from(e: DescriptorError) -> Self {
        let category = match &e {
            DescriptorError::Io { .. } => Category::Io,
            DescriptorError::Parse { .. }
            | DescriptorError::Malformed { .. }
            | DescriptorError::WrongLength(_)
            | DescriptorError::ElementOutOfRange { .. }
            | DescriptorError::ZeroVector => Category::Format,
            DescriptorError::EmptySet | DescriptorError::TooLarge(_) => Category::Input,
            DescriptorError::InvalidParameter(_) => Category::Usage,
        };
        Self::new(category, e)
    }
}

impl From<MatchError> for CliError {
    fn from(e: MatchError) -> Self {
        let category = match &e {
            MatchError::EmptyDatabase
            | MatchError::EmptyQueries
            | MatchError::QueryCountMismatch { .. } => Category::Input,
            MatchError::InvalidThreshold(_) => Category::Usage,
            MatchError::InvalidConfig(_) => Category::Config,
        };
        Self::new(category, e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Category::Io, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        let category = if e.is_io() {
            Category::Io
        } else {
            Category::Format
        };
        Self::new(category, e)
    }
}
