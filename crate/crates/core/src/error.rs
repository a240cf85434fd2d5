use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid letter distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid score matrix: {0}")]
    InvalidScores(String),

    #[error("scoring model violates E[K] < 0, K_max > 0: {0}")]
    InvalidModel(String),

    #[error("invalid gap penalty: {0}")]
    InvalidGap(String),

    #[error("gap table has {len} entries, cannot evaluate gamma({k})")]
    TableExhausted { len: usize, k: usize },

    #[error("gap penalty has no declared asymptotic class")]
    UnknownAsymptoticClass,

    #[error("invalid alignment: {0}")]
    InvalidAlignment(String),

    #[error("sequences must be nonempty")]
    EmptySequence,

    #[error("sequence too short: need length >= {need}, got {got}")]
    SequenceTooShort { need: usize, got: usize },

    #[error("enumeration cap exceeded: {0}")]
    SizeCap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gap series diverges at theta = {theta}")]
    Divergent { theta: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("theta = {theta} is not a verified root (|psi| = {residual:e} > {tol:e})")]
    UnverifiedRoot { theta: f64, residual: f64, tol: f64 },

    #[error("sampler residual mass {residual:e} above threshold at cap {cap}")]
    SamplerResidual { residual: f64, cap: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { source_name: source_name.into(), message: message.into() }
    }
}
