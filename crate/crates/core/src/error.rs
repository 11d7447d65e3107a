use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("pointer width must be positive, got {0}")]
    InvalidWidth(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too coarse: spacing {spacing} exceeds width/8 = {limit}")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("displacement {shift} exceeds 10% of grid span {span}")]
    DisplacementTooLarge { shift: f64, span: f64 },

    #[error("incompatible grids")]
    IncompatibleGrids,

    #[error("profile has zero norm")]
    ZeroNorm,

    #[error("post-selection annihilated every term")]
    NullPostSelection,

    #[error("lobes overlap: largest normalized term overlap {overlap:e} exceeds {limit:e}")]
    OverlappingLobes { overlap: f64, limit: f64 },

    #[error("weak value undefined: pre- and post-selected states are orthogonal")]
    UndefinedWeakValue,

    #[error("transmissivity {0} outside [0, 1]")]
    InvalidTransmissivity(f64),

    #[error("spin rotation is not unitary: |a|^2 + |b|^2 = {0}")]
    NonUnitaryRotation(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
