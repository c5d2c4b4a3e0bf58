use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register of {requested} qubits exceeds the cap of {max}")]
    Capacity { requested: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |M - M†| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max |U†U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("operator is not an involution (max |M² - I| = {deviation:e})")]
    NotInvolution { deviation: f64 },

    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),

    #[error("impossible branch: outcome {outcome} has probability {probability:e}")]
    ImpossibleBranch { outcome: String, probability: f64 },

    #[error("qubit {qubit} is entangled with the register (residual {residual:e})")]
    NotFactorized { qubit: usize, residual: f64 },

    #[error("random walk exceeded the cap of {cap} steps")]
    StepCapExceeded { cap: usize },

    #[error("unknown input symbol {0:?}")]
    UnknownSymbol(char),

    #[error("grid too narrow: boundary mass {boundary_mass:e}")]
    Truncation { boundary_mass: f64 },

    #[error("impossible transaction for trader {trader}: amplitude {amplitude:e}")]
    ImpossibleTransaction { trader: usize, amplitude: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
