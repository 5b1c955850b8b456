use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NonHermitianInput(f64),
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range 1..={max}")]
    BadIndex { index: usize, max: usize },
    #[error("bad noise parameter: {0}")]
    BadNoise(String),
    #[error("bad dimension: {0}")]
    BadDim(String),
    #[error("degenerate triple: coplanarity factor {0:.3e}")]
    DegenerateTriple(f64),
    #[error("bad beta {0}: must lie in (0, 1]")]
    BadBeta(f64),
    #[error("bad sign pattern: {0}")]
    BadSigns(String),
    #[error("state has Bloch components outside the operator span: {0}")]
    UnsupportedState(String),
    #[error("operator set has no affine map (CUSTOM family)")]
    NoAffineMap,
    #[error("kernel at cutoff is {0:.3e} > 1e-10")]
    CutoffTooSmall(f64),
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("imaginary residue {0:.3e} of max |Re| exceeds 1e-8")]
    ImaginaryResidue(f64),
    #[error("kernel not integrable: {0}")]
    NonIntegrable(String),
    #[error("field does not cover the support: {0}")]
    InsufficientSupport(String),
    #[error("no closed form for this case: {0}")]
    UnknownCase(String),
    #[error("singular point: distance {0:.3e} to the singular shell")]
    SingularPoint(f64),
    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudget(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
