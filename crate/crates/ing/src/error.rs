use std::fmt;
use std::path::{Path, PathBuf};

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

/// A file-level failure. Every variant names the offending path.
#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: bad magic at byte offset {offset}", path.display())]
    BadMagic { path: PathBuf, offset: u64 },
    #[error("{}: truncated at byte offset {offset} (need {needed} bytes, {available} available)", path.display())]
    Truncated {
        path: PathBuf,
        offset: u64,
        needed: u64,
        available: u64,
    },
    #[error("{}: {trailing} trailing bytes after payload at byte offset {offset}", path.display())]
    TrailingBytes { path: PathBuf, offset: u64, trailing: u64 },
    #[error("{}: non-finite value at byte offset {offset}", path.display())]
    NonFinite { path: PathBuf, offset: u64 },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Core {
        path: PathBuf,
        #[source]
        source: ing_core::Error,
    },
    #[error("{} has {} problem(s):\n{}", path.display(), violations.len(), Violations(violations))]
    Manifest { path: PathBuf, violations: Vec<String> },
}

impl ProtocolError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ProtocolError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn invalid(path: &Path, message: impl Into<String>) -> Self {
        ProtocolError::Invalid {
            path: path.to_owned(),
            message: message.into(),
        }
    }

    pub fn core(path: &Path, source: ing_core::Error) -> Self {
        ProtocolError::Core {
            path: path.to_owned(),
            source,
        }
    }
}

struct Violations<'a>(&'a [String]);

impl fmt::Display for Violations<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}
