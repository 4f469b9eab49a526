use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{n} qubits exceeds the cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },

    #[error("matrix of size {0} is not a power-of-two square")]
    NotPowerOfTwo(usize),

    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("not a subspace: {0}")]
    NotSubspace(String),

    #[error("malformed symplectic basis: {0}")]
    MalformedBasis(String),

    #[error("inverse queries are not available for this oracle")]
    InverseUnavailable,

    #[error("postselection exhausted after {attempts} attempts")]
    PostselectionExhausted { attempts: u64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("complement of dimension {0} is too large for an explicit twirl")]
    ComplementTooLarge(usize),

    #[error("principal root is ambiguous: eigenphase {0:.4} is too close to the branch cut")]
    BranchAmbiguity(f64),

    #[error("copy source exhausted")]
    ProviderExhausted,

    #[error("learner failed during {stage}: {reason}")]
    LearnerFailure { stage: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn learner(stage: &str, reason: impl Into<String>) -> Self {
        Error::LearnerFailure {
            stage: stage.to_string(),
            reason: reason.into(),
        }
    }
}
