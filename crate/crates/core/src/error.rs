use thiserror::Error;

use crate::groups::Level;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variance mismatch: {0}")]
    VarianceMismatch(String),
    #[error("slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("singular frame (|det| = {0:e})")]
    SingularFrame(f64),
    #[error("invalid group element: {0}")]
    InvalidGroupElement(String),
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(Level, Level),
    #[error("not factorizable: {0}")]
    NotFactorizable(String),
    #[error("not a null-hypersurface metric: {0}")]
    NotNullMetric(String),
    #[error("embedding is not isotropic: {0}")]
    NotIsotropic(String),
    #[error("normalization violated: f(xi) = {0}, expected 1")]
    Normalization(f64),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("metric signature: {0}")]
    Signature(String),
    #[error("tensor not symmetric: residual {0:e}")]
    NotSymmetric(f64),
    #[error("G_I admissibility violated: chi residual {residual:e} at {point:?}")]
    GiAdmissibility { residual: f64, point: Vec<f64> },
    #[error("connection not adapted to structure: {0}")]
    NotAdapted(String),
    #[error("connections not over the same radiation structure: off-xi residual {0:e}")]
    DifferentStructures(f64),
    #[error("frame not adapted or connection not metric: residual {0:e}")]
    BlockShape(f64),
    #[error("frame relations violated: residual {0:e}")]
    FrameRelations(f64),
    #[error("numerical rank ambiguity: {0}")]
    RankAmbiguity(String),
    #[error("closure violation: {0}")]
    ClosureViolation(String),
    #[error("stress-energy pattern invalid: {0}")]
    PatternInvariant(String),
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
