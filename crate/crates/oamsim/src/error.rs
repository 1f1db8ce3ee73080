//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("path list is empty")]
    EmptyPaths,
    #[error("duplicate path `{0}`")]
    DuplicatePath(String),
    #[error("invalid OAM window [{l_min}, {l_max}]")]
    InvalidWindow { l_min: i32, l_max: i32 },
    #[error("unknown path `{0}`")]
    UnknownPath(String),
    #[error("OAM value {ell} outside window [{l_min}, {l_max}]")]
    OutOfWindow { ell: i32, l_min: i32, l_max: i32 },
    #[error("label carries a polarization but the space has polarization disabled")]
    UnexpectedPolarization,
    #[error("label is missing a polarization in a polarization-enabled space")]
    MissingPolarization,
    #[error("operands live on different mode spaces")]
    SpaceMismatch,
    #[error("matrix shape {rows}x{cols} does not match space dimension {dim}")]
    DimensionMismatch { rows: usize, cols: usize, dim: usize },
    #[error("spiral phase charge must be nonzero")]
    ZeroCharge,
    #[error("element requires two distinct paths, got `{0}` twice")]
    IdenticalPaths(String),
    #[error("polarization elements need a polarization-enabled space")]
    PolarizationDisabled,
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquareMatrix { rows: usize, cols: usize },
    #[error("tolerance must be positive")]
    NonPositiveTolerance,
    #[error("cycle check needs at least two designated modes")]
    TooFewModes,
    #[error("mode list contains the duplicate entry {0}")]
    DuplicateMode(i32),
    #[error("window too narrow for the built-in cycle circuit (need [-3, 3])")]
    WindowTooNarrow,
    #[error("toolbox is empty")]
    EmptyToolbox,
    #[error("invalid search target: {0}")]
    InvalidTarget(String),
    #[error("circuit does not satisfy the target criterion, cannot simplify")]
    SimplifyInputFails,
    #[error("invalid imperfection parameters: {0}")]
    InvalidParams(String),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("render grid must have at least 16 pixels per side, got {0}")]
    GridTooSmall(usize),
    #[error("sampling ring leaves the image")]
    RingOutOfBounds,
    #[error("crosstalk column sums to zero")]
    ZeroColumnSum,
    #[error("index {index} out of range ({len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cannot parse mode label `{0}`, expected path:ell[:H|V]")]
    BadLabel(String),
}
