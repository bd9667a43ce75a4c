use thiserror::Error;

/// Library-wide error type.
///
/// Errors split into two broad groups: problems with the input data or
/// requested configuration, and numerical failures inside an algorithm.
/// `exit_code` maps the group to the process exit status used by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no segments provided")]
    EmptyInput,

    #[error("segment {index} has length {len}, need at least {min}")]
    SegmentTooShort { index: usize, len: usize, min: usize },

    #[error("between-segment tests need at least 2 segments, got {got}")]
    NeedTwoSegments { got: usize },

    #[error("window fraction must lie strictly between 0 and 0.5, got {got}")]
    InvalidWindowFraction { got: f64 },

    #[error("chain of length {len} too short for window fraction {fraction}: each window must hold at least {min} draws")]
    ChainTooShort { len: usize, fraction: f64, min: usize },

    #[error("insufficient variation: every draw falls in a single category")]
    InsufficientVariation,

    #[error("category index {index} out of range for {categories} categories (segment {segment}, position {position})")]
    IndexOutOfRange {
        index: usize,
        categories: usize,
        segment: usize,
        position: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chain {chain}: {source}")]
    InChain {
        /// 1-based chain number, matching report units and CSV headers.
        chain: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint {checkpoint}: {source}")]
    AtCheckpoint {
        checkpoint: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit status for this error: 2 for data or configuration
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            Error::InChain { source, .. } | Error::AtCheckpoint { source, .. } => {
                source.exit_code()
            }
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
