use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} qubits vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("qubit count {0} exceeds the supported maximum of {max}", max = crate::pauli::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("operator is not Hermitian: max |Im(c)| = {max_imag:e}")]
    NotHermitian { max_imag: f64 },

    #[error("qubit index {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("cannot parse Pauli string: {0}")]
    Parse(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dense oracle limited to {max} qubits, got {n}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("projector order k={k} out of range 1..={n}")]
    ProjectorOrder { k: usize, n: usize },

    #[error("flow integration unstable at s={s}: norm grew by {growth:e}; reduce the step size")]
    IntegratorInstability { s: f64, growth: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("trajectory I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
