use thiserror::Error;

use crate::dwt::Direction;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported wavelet filter `{0}` (expected haar, daub6, coif4 or sym8)")]
    UnsupportedFilter(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid level range: {0}")]
    InvalidLevelRange(String),

    #[error("Hurst exponent {0} outside (0, 1)")]
    InvalidHurst(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("circulant embedding failed: {0}")]
    EmbeddingFailure(String),

    #[error("level {level} of direction {direction} has zero energy")]
    DegenerateLevel { level: usize, direction: Direction },

    #[error("spectrum is already bias corrected")]
    AlreadyCorrected,

    #[error("need at least 2 spectrum levels, got {0}")]
    InsufficientLevels(usize),

    #[error("pairwise weight needs distinct levels, got {0} twice")]
    DegeneratePair(usize),

    #[error("image of {rows}x{cols} cannot hold the requested patches: {reason}")]
    InsufficientExtent {
        rows: usize,
        cols: usize,
        reason: String,
    },

    #[error("insufficient groups: {0}")]
    InsufficientGroups(String),

    #[error("invalid input: {0}")]
    Parse(String),

    #[error("replicate {replicate} (seed {seed}) failed: {source}")]
    Replicate {
        replicate: usize,
        seed: u64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        if let Error::Replicate { source, .. } = self {
            return source.is_numeric();
        }
        matches!(
            self,
            Error::EmbeddingFailure(_)
                | Error::DegenerateLevel { .. }
                | Error::InsufficientLevels(_)
                | Error::DegeneratePair(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
