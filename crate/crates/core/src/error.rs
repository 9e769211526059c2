use std::path::PathBuf;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// `best_ratio` is NaN when no attempt was made.
    #[error("generation failed: {reason}{}", best_suffix(*.best_ratio))]
    Generation { reason: String, best_ratio: f64 },

    #[error("degenerate audio: {0}")]
    DegenerateAudio(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: unsupported audio format: {msg}")]
    UnsupportedFormat { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

fn best_suffix(best_ratio: f64) -> String {
    if best_ratio.is_nan() {
        String::new()
    } else {
        format!(" (best achieved ratio {best_ratio:.6})")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
