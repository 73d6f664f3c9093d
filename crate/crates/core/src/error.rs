use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain size {0}: at least 2 sites are required")]
    InvalidSize(usize),

    #[error("invalid coupling J = {0}: must be positive and finite")]
    InvalidCoupling(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("site index {index} out of range for a chain of {length} sites")]
    SiteOutOfRange { index: usize, length: usize },

    #[error("observable length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{qubits} qubits exceed the simulator capacity of {cap}")]
    Capacity { qubits: usize, cap: usize },

    #[error("parameter vector has {found} entries, ansatz expects {expected}")]
    ParameterCount { expected: usize, found: usize },

    #[error("term {0} is neither all-Z nor all-X and cannot be sampled")]
    UnsupportedGrouping(String),

    #[error("parallel boundary fields (h_l = {h_l}, h_r = {h_r}) are outside the anti-parallel sector")]
    UnsupportedSector { h_l: f64, h_r: f64 },

    #[error("numerical integrity violated: {0}")]
    NumericalIntegrity(String),

    #[error("series length mismatch: {0} vs {1}")]
    SeriesMismatch(usize, usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
