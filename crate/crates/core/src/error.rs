use thiserror::Error;

use crate::io::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Boxed error returned by user-supplied callbacks (window generators).
pub type BoxError = Box<dyn std::error::Error + Send + Sync + 'static>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pose parse error{}: {message}", frame.map(|f| format!(" in frame {f}")).unwrap_or_default())]
    Parse {
        frame: Option<usize>,
        message: String,
    },

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("character {character_id} has an empty non-intersection region (fully occluded)")]
    DegenerateRegion { character_id: u32 },

    #[error("character {character_id} does not appear in the reference ranks")]
    IdentityMismatch { character_id: u32 },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("generator failed on window {window}: {source}")]
    Generator {
        window: usize,
        #[source]
        source: BoxError,
    },

    #[error(transparent)]
    Format(#[from] FormatError),
}

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub(crate) fn parse(frame: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            frame,
            message: message.into(),
        }
    }
}
