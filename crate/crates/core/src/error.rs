use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("invalid flat: {0}")]
    InvalidFlat(String),
    #[error("invalid direction: {0}")]
    InvalidDirection(String),
    #[error("arms too close: <dir1, dir2> = {inner} exceeds -1/2")]
    AngleTooSmall { inner: f64 },
    #[error("flat is not contained in the cone")]
    FlatNotContained,
    #[error("apex lies on the flat")]
    ApexOnFlat,
    #[error("set is not a cone about the given center")]
    NotACone,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("ball must be centered at the shade apex")]
    OffApexBall,
    #[error("degenerate segment: endpoint equals apex")]
    DegenerateSegment,
    #[error("boundary piece of dimension {piece_dim} is too large for set dimension {set_dim}")]
    PieceTooLarge { piece_dim: usize, set_dim: usize },
    #[error("correction integral diverges at the viewpoint")]
    Divergent,
    #[error("gauge violates the Dini condition (constant c = {c})")]
    DiniViolation { c: f64 },
    #[error("mode/configuration mismatch: {0}")]
    ModeMismatch(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown flat id {0}")]
    UnknownFlat(usize),
    #[error("mesh has no free or sliding vertices")]
    NoDegreesOfFreedom,
    #[error("degenerate simplex {index} (volume {volume:e})")]
    DegenerateSimplex { index: usize, volume: f64 },
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("domain violation: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
