use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel (row {row}, col {col}) lies outside the {width}x{height} frame")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("correlation undefined: {0} image has zero variance")]
    ConstantImage(&'static str),

    #[error("approximate lumen extraction failed: no pixel below the mean intensity")]
    LumenExtraction,

    #[error("ellipse fit failed: {0}")]
    Fit(String),

    #[error("degenerate score: {0}")]
    DegenerateScore(&'static str),

    #[error("frame {0} has no ground-truth contour")]
    MissingGroundTruth(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    /// Errors caused by malformed or inconsistent input, as opposed to
    /// data that is well-formed but numerically degenerate.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::EmptyMask(_)
                | Error::ConstantImage(_)
                | Error::LumenExtraction
                | Error::Fit(_)
                | Error::DegenerateScore(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
