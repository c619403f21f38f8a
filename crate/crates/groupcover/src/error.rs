//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by corpus handling, estimation, simulation and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dictionary must not be empty")]
    EmptyDictionary,

    #[error("duplicate feature `{0}` in dictionary")]
    DuplicateFeature(String),

    #[error("invalid topic set: {0}")]
    InvalidTopicSet(String),

    #[error("unknown topic id {0}")]
    UnknownTopic(usize),

    #[error("unknown topic label `{0}`")]
    UnknownTopicLabel(String),

    #[error("infeasible corpus spec: {0}")]
    InfeasibleSpec(String),

    #[error("corpus file, line {line}: {message}")]
    CorpusFormat { line: usize, message: String },

    #[error("sequence is empty, no statistics can be derived")]
    EmptySequence,

    #[error("smoothing factor must be positive, got {0}")]
    InvalidSmoothing(f64),

    #[error("counts have already been smoothed")]
    AlreadySmoothed,

    #[error("counts are unsmoothed and have no observations for this estimate")]
    UnsmoothedZeroCounts,

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("threshold alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("deniability parameter delta out of range: {0}")]
    InvalidDelta(f64),

    #[error("epsilon must be non-negative, got {0}")]
    InvalidEpsilon(f64),

    #[error("observer coverage must lie in (0, 1], got {0}")]
    InvalidCoverage(f64),

    #[error("topic distributions cover different topic sets ({0} vs {1} topics)")]
    TopicMismatch(usize, usize),

    #[error("proxy pool is empty")]
    EmptyPool,

    #[error("unknown proxy id {0}")]
    UnknownProxy(usize),

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error("corpus too small: {0}")]
    CorpusTooSmall(String),

    #[error("token issuance limit exceeded ({limit} per user per window)")]
    IssuanceLimit { limit: u32 },

    #[error("malformed token payload: {0}")]
    MalformedToken(String),

    #[error("invalid token state transition: {0}")]
    TokenState(String),

    #[error("config file, line {line}: {message}")]
    ConfigFormat { line: usize, message: String },

    #[error("unknown figure id `{id}`; valid ids: {valid}")]
    UnknownFigure { id: String, valid: String },

    #[error("no metrics found in `{0}`")]
    EmptyMetrics(String),

    #[error("metrics file `{path}`: {message}")]
    MetricsFormat { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid configuration or input files, as
    /// opposed to runtime failures. The CLI maps these to exit code 1.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::ConfigFormat { .. }
                | Error::InfeasibleSpec(_)
                | Error::CorpusFormat { .. }
                | Error::UnknownFigure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
