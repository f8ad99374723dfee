use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the geometry kernels.
///
/// [`Error::category`] groups them for callers that need a coarse verdict
/// (the CLI maps categories onto exit codes).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected n = {expected}, got n = {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid integrand: {0}")]
    InvalidIntegrand(String),

    #[error("integrand is not positive: gamma({direction:?}) = {value}")]
    NonPositive { direction: Vec<f64>, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "convexity verdicts disagree: eigenvalue test says convex = {eigen_convex} \
         (min eigenvalue {min_eigenvalue:e} at {eigen_witness:?}), midpoint test says \
         convex = {midpoint_convex} (witness pair {midpoint_witness:?})"
    )]
    ConvexityDisagreement {
        eigen_convex: bool,
        min_eigenvalue: f64,
        eigen_witness: Vec<f64>,
        midpoint_convex: bool,
        midpoint_witness: Option<(Vec<f64>, Vec<f64>)>,
    },

    #[error("nearly parallel overlapping segments {first} and {second}; increase the resolution")]
    OverlappingSegments { first: usize, second: usize },

    #[error("arcs do not close: gap {gap:?} after arc {arc}")]
    ArcsNotClosed { arc: usize, gap: [f64; 2] },

    #[error("arc endpoints do not match the crossing set: {0}")]
    ArcEndpointMismatch(String),

    #[error("too few usable samples on piece {piece}: {count} < {required}; increase the resolution")]
    TooFewSamples { piece: usize, count: usize, required: usize },

    #[error("zero-length segment at sample {index}")]
    ZeroLengthSegment { index: usize },

    #[error("degenerate tangent map at vertex ({row}, {col})")]
    DegenerateTangent { row: usize, col: usize },

    #[error("surface does not close: {0}")]
    NonClosingSurface(String),

    #[error("cycle enumeration exceeded the cap of {cap} partial paths")]
    EnumerationCap { cap: usize },

    #[error("flow is extinct: t = {t} >= c = {c}")]
    Extinction { t: f64, c: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

/// Coarse error grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    ResourceCap,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidIntegrand(_)
            | Error::NonPositive { .. }
            | Error::InvalidArgument(_)
            | Error::Unsupported(_)
            | Error::ArcsNotClosed { .. }
            | Error::ArcEndpointMismatch(_)
            | Error::NonClosingSurface(_)
            | Error::Extinction { .. } => ErrorCategory::Validation,
            Error::EnumerationCap { .. } => ErrorCategory::ResourceCap,
            Error::ConvexityDisagreement { .. }
            | Error::OverlappingSegments { .. }
            | Error::TooFewSamples { .. }
            | Error::ZeroLengthSegment { .. }
            | Error::DegenerateTangent { .. }
            | Error::Internal(_) => ErrorCategory::Numerical,
        }
    }
}
