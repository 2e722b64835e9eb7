use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("the zero vector has no primitive representative")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point is not feasible")]
    NotFeasible,
    #[error("degenerate vertex: {0}")]
    DegenerateVertex(String),
    #[error("direction is zero")]
    ZeroDirection,
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("vertex {0} does not lie on the parabola")]
    NotOnParabola(usize),
    #[error("vertex {0} breaks the strictly increasing order")]
    NotSorted(usize),
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("direction is not improving")]
    NotImproving,
    #[error("objective is unbounded along the direction")]
    UnboundedImprovement,
    #[error("iteration limit {0} reached")]
    MaxIterations(usize),
    #[error("iterate is not a vertex")]
    NotAVertex,
    #[error("internal mismatch: {0}")]
    InternalMismatch(String),
    #[error("certificate failure at t = {t}: {reason}")]
    CertificateFailure { t: u64, reason: String },
    #[error("unknown pivot rule `{0}`")]
    UnknownRule(String),
    #[error("pivot rule returned {0}, which was not offered")]
    InvalidChoice(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("M = {m} exceeds the scan cap {cap}")]
    CapExceeded { m: u64, cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
