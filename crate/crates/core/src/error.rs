use thiserror::Error;

/// Errors produced by the simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has a zero dimension")]
    EmptyMatrix,
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max |U U^dagger - I| = {0:.3e})")]
    NotUnitary(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotUnity(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("temperature must be non-negative, got {0} mK")]
    NegativeTemperature(f64),
    #[error("pointer state is not diagonal in its measurement basis (max off-diagonal {0:.3e})")]
    NonDiagonalPointer(f64),
    #[error("pointer dimension {pointer} is not a multiple of system dimension {system}")]
    PointerDimNotMultiple { system: usize, pointer: usize },
    #[error("outcome {outcome} has probability {probability:.3e}, below 1e-15")]
    ImprobableOutcome { outcome: usize, probability: f64 },
    #[error("post-selection probability {0:.3e} vanishes")]
    VanishingPostselection(f64),
    #[error("coupling |g A_w| = {0} exceeds the first-order regime bound 0.1")]
    CouplingOutOfRange(f64),
    #[error("validity bound violated: |g A'_w|^2 Var(B) = {0} >= 1")]
    ValidityBound(f64),
    #[error("meter truncation too coarse: tail population {0:.3e} exceeds 1e-10")]
    Truncation(f64),
    #[error("Bures and SLD Fisher information disagree by {0:.1}%")]
    QfiDisagreement(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
