use thiserror::Error;

/// Errors produced by the fusion library and the tracking simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} is not symmetric")]
    NotSymmetric(&'static str),

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("fused information matrix is indefinite")]
    IndefiniteFusion,

    #[error("weight optimization failed: {0}")]
    Optimization(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("parallel bearings: |sin(z2 - z1)| = {0:e}")]
    ParallelBearings(f64),

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sensor deployment failed: {0}")]
    Deployment(String),

    #[error("tracker {tracker}: {source}")]
    Tracker {
        tracker: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_tracker(self, tracker: usize) -> Self {
        Error::Tracker {
            tracker,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad inputs or configuration rather than
    /// numerical breakdown during a computation.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::Deployment(_) | Error::Empty(_) => true,
            Error::Tracker { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
