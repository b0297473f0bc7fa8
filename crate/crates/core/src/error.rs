use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the geometry, scoring and evaluation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {norm:e} is too small to normalize")]
    ZeroNormVector { norm: f64 },

    #[error("embedding dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("response embedding coincides with context embedding (theta(r,c) = {theta:e})")]
    ResponseEqualsContext { theta: f64 },

    #[error("degenerate denominator theta(r,c) = {theta:e}")]
    DegenerateDenominator { theta: f64 },

    #[error("response embedding coincides with query embedding (|r - q| = {norm:e})")]
    ZeroDisplacement { norm: f64 },

    #[error("reference set contains no usable pairs")]
    EmptyReference,

    #[error("reference displacement directions cancel (mean norm {norm:e})")]
    DegenerateMean { norm: f64 },

    #[error("k = {k} out of range for a reference index of {len} entries")]
    KOutOfRange { k: usize, len: usize },

    #[error("{0} group is empty")]
    EmptyGroup(&'static str),

    #[error("non-finite score {0}")]
    NonFiniteScore(f64),

    #[error("group too small for Cohen's d (need >= 2, got {0})")]
    GroupTooSmall(usize),

    #[error("pooled standard deviation {0:e} is degenerate")]
    DegenerateVariance(f64),

    #[error("all {0} bootstrap resamples were degenerate")]
    AllResamplesDegenerate(usize),

    #[error("insufficient grounded records for split: {0}")]
    InsufficientGrounded(String),

    #[error("domain has {0} records, need at least 2")]
    DomainTooSmall(usize),

    #[error("capacity exceeded: {n_domains} orthogonal domains do not fit in dimension {dim}")]
    CapacityExceeded { n_domains: usize, dim: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors that come from degenerate geometry or statistics rather
    /// than malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::ZeroNormVector { .. }
                | Error::ResponseEqualsContext { .. }
                | Error::DegenerateDenominator { .. }
                | Error::ZeroDisplacement { .. }
                | Error::DegenerateMean { .. }
                | Error::DegenerateVariance(_)
                | Error::AllResamplesDegenerate(_)
        )
    }
}
