use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DfsError {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("register of {requested} qubits exceeds the {max}-qubit limit")]
    RegisterTooLarge { requested: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("qubit index {index} out of range for a {n}-qubit register")]
    QubitOutOfRange { index: usize, n: usize },
    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),
    #[error("empty qubit set")]
    EmptyQubitSet,
    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown pulse label `{0}`")]
    UnknownPulse(String),
    #[error("malformed sequence definition: {0}")]
    SequenceFormat(String),
    #[error("unsupported sequence: {0}")]
    UnsupportedSequence(String),
    #[error("all shots rejected by post-selection")]
    AllRejected,
    #[error("not enough data points: need {need}, have {have}")]
    TooFewPoints { need: usize, have: usize },
    #[error("fit did not converge: {0}")]
    NoConvergence(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, DfsError>;
