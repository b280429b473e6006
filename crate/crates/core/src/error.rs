use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("boundary-ambiguous: {0}")]
    Ambiguous(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 precondition or hypothesis, 3 ambiguity, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Precondition(_) | Error::Parse { .. } => 2,
            Error::Ambiguous(_) => 3,
            Error::Io(_) => 4,
        }
    }

    pub(crate) fn parse(col: usize, msg: impl Into<String>) -> Error {
        Error::Parse { line: 1, col, msg: msg.into() }
    }

    /// Re-anchors a single-line parse error at `line`, shifting the column by `col_offset`.
    pub fn at_line(self, line: usize, col_offset: usize) -> Error {
        match self {
            Error::Parse { col, msg, .. } => Error::Parse { line, col: col + col_offset, msg },
            Error::Domain(msg) | Error::Precondition(msg) => {
                Error::Parse { line, col: col_offset + 1, msg }
            }
            other => other,
        }
    }
}
