use std::path::PathBuf;

/// Errors surfaced by the library. Validation failures (bad configuration or
/// arguments) are kept distinct from runtime failures so the CLI can map them
/// to different exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate dice inputs: both projection vectors are all-zero")]
    DegenerateDice,

    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("missing or unreadable file {path}: {source}")]
    FileIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub fn file_io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::FileIo {
            path: path.into(),
            source,
        }
    }

    pub fn corrupt(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::CorruptFile {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::DegenerateDice)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
