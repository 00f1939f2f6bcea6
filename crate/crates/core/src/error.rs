use thiserror::Error;

/// Errors produced by basis construction, model fitting, simulation, and IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("t = {t} is outside the basis domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("basis needs num_basis >= order, got num_basis = {num_basis}, order = {order}")]
    InvalidBasisSpec { num_basis: usize, order: usize },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("bases are defined on different domains: [{0}, {1}] vs [{2}, {3}]")]
    DomainMismatch(f64, f64, f64, f64),

    #[error("under-determined smoothing: {points} grid points for {num_basis} basis functions")]
    UnderDetermined { points: usize, num_basis: usize },

    #[error("grid must be strictly increasing")]
    NonMonotonicGrid,

    #[error("grid must be uniformly spaced")]
    NonUniformGrid,

    #[error("dataset must contain at least one sample")]
    EmptyDataset,

    #[error("samples are expanded on different basis specifications")]
    BasisMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interval inverted at sample {sample}, grid index {index}: lower = {lower} > upper = {upper}")]
    InvertedInterval {
        sample: usize,
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("predictor index {index} out of range for {count} predictors")]
    PredictorIndexOutOfRange { index: usize, count: usize },

    #[error("the Monte Carlo method needs at least 2 replicates, got {0}")]
    TooFewReplicates(usize),

    #[error("significance level must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("residual pool is empty")]
    EmptyResidualPool,

    #[error("operation requires a {expected} fit, got {found}")]
    WrongModelKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("covariance factorization failed even with jitter up to {max_jitter}")]
    CovarianceFactorization { max_jitter: f64 },

    #[error("simulation case {0} does not exist; expected 1-4")]
    InvalidSimCase(u8),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("case {case} replicate {replicate}: {source}")]
    ReplicateFailed {
        case: u8,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("panel data error: {0}")]
    Panel(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// A short machine-parsable category for CLI error reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. }
            | Error::NonMonotonicGrid
            | Error::NonUniformGrid
            | Error::EmptyDataset
            | Error::BasisMismatch
            | Error::DimensionMismatch(_)
            | Error::InvertedInterval { .. }
            | Error::UnderDetermined { .. }
            | Error::Panel(_) => "data",
            Error::InvalidBasisSpec { .. }
            | Error::InvalidKnots(_)
            | Error::DomainMismatch(..)
            | Error::TooFewReplicates(_)
            | Error::InvalidAlpha(_)
            | Error::InvalidSimCase(_)
            | Error::InvalidConfig(_) => "config",
            Error::PredictorIndexOutOfRange { .. }
            | Error::WrongModelKind { .. }
            | Error::EmptyResidualPool => "model",
            Error::CovarianceFactorization { .. } => "numeric",
            Error::ReplicateFailed { source, .. } => source.category(),
            Error::Csv(_) | Error::Io(_) => "io",
        }
    }
}
