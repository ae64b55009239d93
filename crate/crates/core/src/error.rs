use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomoError {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace must be 1, got {0}")]
    BadTrace(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("rank must be in 1..=4, got {0}")]
    InvalidRank(usize),
    #[error("quorum is degenerate: |det P| = {0:.3e}")]
    DegenerateQuorum(f64),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fidelity {0} outside [1/2, 1]")]
    FidelityOutOfRange(f64),
    #[error("fidelity {0} must exceed 1/2: the shot count diverges")]
    Unplannable(f64),
    #[error("probability {0} outside [0, 1] for projector {1}")]
    ProbabilityOutOfRange(f64, String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("exchange coupling has a pole at |epsilon| = U")]
    ExchangePole,
    #[error("Monte Carlo standard error {achieved:.3e} exceeds requested {requested:.3e}; increase samples")]
    InsufficientSamples { achieved: f64, requested: f64 },
    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),
}

pub type Result<T> = std::result::Result<T, TomoError>;
