use thiserror::Error;

/// Errors produced by graph construction and the spectral pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph is not regular: vertex {vertex} has degree {degree}, expected {expected}")]
    NotRegular {
        vertex: usize,
        degree: usize,
        expected: usize,
    },
    #[error("graph is not simple: {0}")]
    NotSimple(String),
    #[error("graph is not connected")]
    NotConnected,
    #[error("branching number q = {0} is below 2")]
    QTooSmall(usize),
    #[error("vertex {vertex} out of range for {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("unknown graph name `{0}`")]
    UnknownName(String),
    #[error("v * degree must be even (v = {v}, degree = {degree})")]
    ParityError { v: usize, degree: usize },
    #[error("invalid random graph request: {0}")]
    InvalidRequest(String),
    #[error("no simple connected sample after {0} attempts")]
    RetryExhausted(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    ConvergenceFailure(usize),
    #[error("spectral parameter is exceptional (mu = {0})")]
    ExceptionalParameter(String),
    #[error("spectral parameter is a band edge (z = +-1)")]
    BandEdge,
    #[error("vertex function is not an eigenfunction (residual {0:.3e})")]
    NotAnEigenfunction(f64),
    #[error("resonance at mu has a Jordan block (dim ker = {kernel}, dim ker^2 = {kernel_sq})")]
    JordanBlock { kernel: usize, kernel_sq: usize },
    #[error("geodesic pairing Gram matrix is singular")]
    SingularGram,
    #[error("symbol belongs to a different graph (expected {expected} entries, found {found})")]
    SymbolMismatch { expected: usize, found: usize },
    #[error("cover exceeds vertex budget ({0} vertices)")]
    DepthTooLarge(usize),
    #[error("cover radius {radius} too small, need at least {needed}")]
    DepthTooSmall { radius: usize, needed: usize },
    #[error("cylinder depth {depth} too shallow for vertex at depth {vertex_depth}")]
    CylinderTooShallow { depth: usize, vertex_depth: usize },
    #[error("boundary cylinders overlap")]
    CylindersOverlap,
    #[error("intertwiner support reaches the truncation boundary")]
    SupportTooWide,
    #[error("parameter is tempered (|z| = 1); measure recovery needs |z| > 1")]
    TemperedParameter,
}

pub type Result<T> = std::result::Result<T, Error>;
