use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),

    #[error("mode count mismatch: {0} vs {1}")]
    ModeMismatch(usize, usize),

    #[error("at most {max} qubits are supported, got {got}")]
    TooManyQubits { got: usize, max: usize },

    #[error("index {index} out of range for {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operator is not Hermitian: imaginary residual {0:.3e}")]
    NonHermitian(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid Pauli text {0:?}")]
    PauliText(String),

    #[error("requested {requested} states but the space has dimension {available}")]
    TooManyStates { requested: usize, available: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("variance {0:.3e} is negative beyond tolerance")]
    NegativeVariance(f64),

    #[error("matrix is not antisymmetric (deviation {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("two-electron supermatrix is not symmetric (deviation {0:.3e})")]
    NotSymmetric(f64),

    #[error("Pauli {0} is not covered by the measurement plan")]
    Uncovered(String),

    #[error("overlap matrix is indefinite: eigenvalue {0:.3e}")]
    IndefiniteOverlap(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
