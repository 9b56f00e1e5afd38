use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid document {id:?}: {reason}")]
    InvalidDocument { id: String, reason: &'static str },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("unknown document id {0:?}")]
    UnknownDocument(String),
    #[error("zero valid records")]
    EmptyCorpus,
    #[error("cannot split {n_docs} documents into {n_chunks} chunks")]
    InvalidChunkCount { n_chunks: usize, n_docs: usize },

    #[error("statistics are empty")]
    EmptyStats,
    #[error("weighting mode mismatch")]
    ModeMismatch,
    #[error("cannot remove statistics: {0}")]
    InvalidRemoval(&'static str),

    #[error("invalid law parameter {name}: {reason}")]
    InvalidParam {
        name: &'static str,
        reason: &'static str,
    },
    #[error("invalid law input: {0}")]
    InvalidInput(&'static str),
    #[error("non-finite value while evaluating {0}")]
    Domain(&'static str),

    #[error("invalid observation: {0}")]
    InvalidObservation(&'static str),
    #[error("too few observations: need at least {need}, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("invalid validation fraction {0}")]
    InvalidFraction(f64),
    #[error("all restarts produced a non-finite objective")]
    FitFailed,
    #[error("validation set is empty")]
    EmptyValidation,

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("invalid grid resolution {0}")]
    InvalidResolution(usize),
    #[error("start point (mu={mu}, sigma={sigma}) lies outside the search box")]
    StartOutsideBox { mu: f64, sigma: f64 },

    #[error("chunk list is empty")]
    EmptyChunks,
    #[error("no chunk fits budget")]
    NoChunkFitsBudget,
    #[error("no eligible chunk")]
    NoEligibleChunk,
    #[error("brute force is limited to {max} chunks, got {got}")]
    TooManyChunks { max: usize, got: usize },
    #[error("invalid selection target: {0}")]
    InvalidTarget(&'static str),
    #[error("method {0} is not handled here")]
    UnsupportedMethod(&'static str),

    #[error("degenerate subset statistics (sigma = 0)")]
    DegenerateSubset,
    #[error("invalid generator spec: {0}")]
    InvalidSpec(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
