//! Error types shared across the toolkit.

use thiserror::Error;

/// Errors surfaced by grid construction, state builders, phase-space
/// transforms, the interferometer pipeline and the retrieval routines.
#[derive(Debug, Error)]
pub enum ChronoError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("states live on different grids: {0}")]
    GridMismatch(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error(
        "state mass outside the grid is {lost_mass:.3e} (tolerance {tolerance:.1e}); {hint}"
    )]
    Truncation {
        lost_mass: f64,
        tolerance: f64,
        hint: String,
    },

    #[error("window peaks overlap: peak width {peak_width} exceeds spacing/6 = {limit}")]
    OverlappingPeaks { peak_width: f64, limit: f64 },

    #[error("axis too coarse for the oscillatory kernel: {0}")]
    NyquistViolation(String),

    #[error("wrong phase-space map kind: expected {expected}, got {got}")]
    WrongKind { expected: String, got: String },

    #[error("anchor amplitude too small at {anchor}: |psi|^2 marginal = {value:.3e}; pick an anchor away from nodes")]
    AnchorTooSmall { anchor: f64, value: f64 },

    #[error("division floor violated: {0}")]
    DivisionFloor(String),

    #[error("gate kernel annihilates the state (zero-norm output)")]
    ZeroNormOutput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("least-squares system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("consistency check failed: {0}")]
    CheckFailed(String),
}

impl ChronoError {
    /// Process exit code for the CLI: 2 config, 4 check failure, 3 for any
    /// numerical precondition or runtime failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ChronoError::Config(_) => 2,
            ChronoError::CheckFailed(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, ChronoError>;
