use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("site {site} out of range for a chain of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expansion order {0} is not supported (maximum is 4)")]
    UnsupportedOrder(usize),

    #[error("domain wall count {walls} out of range for {sites} sites")]
    DomainWalls { walls: usize, sites: usize },

    #[error("operator is not Hermitian: imaginary part of expectation is {imag:e}")]
    NonHermitian { imag: f64 },

    #[error("Krylov propagation did not converge: {0}")]
    KrylovNonConvergence(String),

    #[error("invalid bipartition cut {cut} for {sites} sites")]
    InvalidCut { cut: usize, sites: usize },

    #[error("half-chain quantity undefined for odd chain length {0}")]
    OddChain(usize),

    #[error("system of {sites} sites exceeds the dense limit of {limit}")]
    TooLargeForDense { sites: usize, limit: usize },

    #[error("invalid sample schedule: {0}")]
    InvalidSchedule(String),

    #[error("schedule mismatch between series: {0}")]
    ScheduleMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("argument outside the valid domain: {0}")]
    Domain(String),

    #[error("no plateau detected: {0}")]
    NoPlateau(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("dense linear algebra failed: {0}")]
    Linalg(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
