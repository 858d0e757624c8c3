use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid registry: {0}")]
    InvalidRegistry(String),
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("unknown label `{label}` for subsystem `{subsystem}`")]
    UnknownLabel { subsystem: String, label: String },
    #[error("no label given for subsystem `{0}`")]
    MissingLabel(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("states live on different registries")]
    RegistryMismatch,
    #[error("subsystem `{0}` appears on both sides of a tensor product")]
    NameClash(String),
    #[error("invalid measurement basis: {0}")]
    InvalidBasis(String),
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("impossible branch: outcome `{0}` has zero probability")]
    ImpossibleOutcome(String),
    #[error("bases do not partition the registry: {0}")]
    Coverage(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("collapse table has no entry for step `{step}` and agent `{agent}`")]
    MissingPolicyEntry { step: String, agent: String },
    #[error("vacuous condition: the condition has zero probability in every view of `{0}`")]
    VacuousCondition(String),
    #[error("hardy check: {0}")]
    Hardy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
