use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Numerical rank is lost at `column` (0-based).
    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("basis is not orthonormal (max |QᵀQ - I| = {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension {p} exceeds the dense oracle limit of {limit}")]
    OracleScale { p: usize, limit: usize },

    #[error("{}line {line}: {message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("corpus validation failed: {0}")]
    CorpusValidation(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stream cannot be reopened: it is an in-memory one-shot source")]
    NotReopenable,

    #[error("evaluation-only stream passed as training input")]
    EvaluationStream,

    #[error("stream exhausted after {blocks_completed} complete blocks ({samples_in_partial} samples into the next one)")]
    PartialStream {
        blocks_completed: usize,
        samples_in_partial: usize,
    },

    #[error("degenerate block {block}: accumulator has no usable energy")]
    DegenerateBlock { block: usize },

    #[error("insufficient samples: have {available}, need at least {required}")]
    InsufficientSamples { available: usize, required: usize },

    #[error("stream is empty")]
    EmptyStream,

    #[error("data has zero total energy")]
    ZeroEnergy,

    #[error("configuration error: {0}")]
    Configuration(String),
}
