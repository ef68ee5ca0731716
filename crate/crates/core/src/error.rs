use thiserror::Error;

/// Everything that can go wrong across the library.
///
/// Validation-type variants (`InvalidMatrix`, `DimensionMismatch`, `OddDimension`,
/// `NotAComplexStructure`, `ZeroRoot`, `UnpairedFactor`, `InvalidSpec`) indicate bad
/// input; the rest indicate numerical breakdown or unreachable internal states.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} is odd; a real matrix squaring to -I must act on an even-dimensional space")]
    OddDimension(usize),

    #[error("J{which} is not a complex structure: ||J^2 + I|| residual {residual:.3e} exceeds tolerance")]
    NotAComplexStructure { which: u8, residual: f64 },

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("tolerance values must lie strictly inside (0, 1): {0}")]
    InvalidTolerance(String),

    #[error("polynomial has a root at 0 (constant term below threshold); the generator a must be invertible")]
    ZeroRoot,

    #[error("unpaired irreducible factor: {0}")]
    UnpairedFactor(String),

    #[error("internal independence assertion failed: {0}")]
    AssertionFailure(String),

    #[error("could not draw a basis with condition number <= {cond_bound} in {attempts} attempts")]
    CondBoundUnreachable { cond_bound: f64, attempts: usize },

    #[error("model is not the quaternion case (requires a complex factor on the unit circle with n = 1)")]
    NotQuaternionCase,

    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than internal numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidMatrix(_)
                | Error::DimensionMismatch { .. }
                | Error::OddDimension(_)
                | Error::NotAComplexStructure { .. }
                | Error::InvalidTolerance(_)
                | Error::ZeroRoot
                | Error::UnpairedFactor(_)
                | Error::InvalidSpec(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
