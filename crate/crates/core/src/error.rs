use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cutoff {cutoff} too small: truncated tail mass {tail_mass:.3e} exceeds {limit:.0e}")]
    CutoffTooSmall { cutoff: usize, tail_mass: f64, limit: f64 },

    #[error("Fock index {index} out of range for cutoff {cutoff}")]
    IndexOutOfRange { index: usize, cutoff: usize },

    #[error("padded dimension {requested} exceeds the configured maximum {max}")]
    PadOverflow { requested: usize, max: usize },

    #[error("post-selection branch has probability {probability:.3e}; treated as impossible")]
    ZeroProbability { probability: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no sign change of the photon-number residual on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("no squeezed local minimum of the uncertainty product for |alpha| = {alpha_abs}")]
    NoSqueezedMinimum { alpha_abs: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not a valid density operator: {0}")]
    InvalidDensity(String),
}

impl Error {
    /// Short stable tag used in machine-readable records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CutoffTooSmall { .. } => "CutoffTooSmall",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::PadOverflow { .. } => "PadOverflow",
            Error::ZeroProbability { .. } => "ZeroProbability",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::NoSqueezedMinimum { .. } => "NoSqueezedMinimum",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InvalidDensity(_) => "InvalidDensity",
        }
    }
}
