use thiserror::Error;

use crate::devices::Party;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown register label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate register label `{0}`")]
    DuplicateLabel(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (trace or norm {0})")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("projector set is not a valid rank-1 instrument: {0}")]
    InvalidInstrument(String),

    #[error("Kraus operators are not complete (deviation {0:e})")]
    IncompleteKraus(f64),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("outcome {outcome} has zero probability")]
    ZeroProbabilityBranch { outcome: u8 },

    #[error("memory is not trivial: {party:?} memory channel in round {round} reads its memory register")]
    MemoryNotTrivial { party: Party, round: usize },

    #[error("round count mismatch: expected {expected}, got {actual}")]
    RoundCountMismatch { expected: usize, actual: usize },

    #[error("enumeration budget exceeded: {0}")]
    EnumerationBudgetExceeded(String),

    #[error("length violation: {0}")]
    LengthViolation(String),

    #[error("invalid probability {0}")]
    InvalidProbability(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("transcript contains no X-basis test rounds")]
    NoTestRounds,

    #[error("unknown device id `{0}`")]
    UnknownDevice(String),

    #[error("unknown guessing strategy `{0}`")]
    UnknownStrategy(String),

    #[error("transcript schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("distribution needs at least {needed} rounds, got {actual}")]
    TooFewRounds { needed: usize, actual: usize },
}
