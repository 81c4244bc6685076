use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("projected {projected} candidate words exceeds the cap of {cap}")]
    ResourceCap { projected: u64, cap: u64 },
    #[error("generator trace {0} is not hyperbolic (|tr| must exceed 2)")]
    NonHyperbolicGenerator(f64),
    #[error("boundary trace {0} is not below -2 (cusped or degenerate torus)")]
    CuspedOrDegenerate(f64),
    #[error("trace triple ({0}, {1}, {2}) gives a reducible pair")]
    Reducible(f64, f64, f64),
    #[error("boundary lengths differ: {0} vs {1}")]
    BoundaryMismatch(f64, f64),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid root functional: {0}")]
    InvalidRoot(String),
    #[error("vector is not traceless (sum {0:e})")]
    NotTraceless(f64),
    #[error("element is not loxodromic: {0}")]
    NotLoxodromic(String),
    #[error("complex spectrum: {0}")]
    ComplexSpectrum(String),
    #[error("graft vector is not in the Cartan subalgebra (sum {0:e})")]
    NotInCartan(f64),
    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("path grid mismatch: {0}")]
    GridMismatch(String),
    #[error("census format version mismatch: found {found:?}, expected {expected:?}")]
    FormatVersionMismatch { found: String, expected: String },
    #[error("config hash mismatch: file has {found}, config gives {expected}")]
    ConfigHashMismatch { found: String, expected: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error stems from floating-point trouble rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::EigenFailure(_) | Error::NonFinite(_) | Error::ComplexSpectrum(_) | Error::NotLoxodromic(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
