use thiserror::Error;

/// Errors raised by the library. Domain-negative answers (a matrix that is not
/// a member, a generator set that is not kinematical) are ordinary return
/// values, not errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension {0} is too small (need at least {1})")]
    DimensionTooSmall(usize, usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("metric parameter sigma must be finite and nonzero, got {0}")]
    DegenerateMetric(f64),

    #[error("gram matrix is not symmetric positive definite")]
    GramNotPositiveDefinite,

    #[error("matrix is not self-adjoint (residual {residual:.3e} exceeds {bound:.3e})")]
    NotSelfAdjoint { residual: f64, bound: f64 },

    #[error("eigenvalue {0:.3e} is not positive; logarithm undefined")]
    NotPositive(f64),

    #[error("block is not orthogonal (residual {0:.3e})")]
    NotOrthogonal(f64),

    #[error("time sign must be +1 or -1, got {0}")]
    InvalidTimeSign(f64),

    #[error("b and c are not collinear (defect {0:.3e})")]
    NotCollinear(f64),

    #[error("generator has no boost component")]
    ZeroGenerator,

    #[error("empty generator list")]
    EmptyInput,

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not in the normalizer (residual {0:.3e})")]
    NotInNormalizer(f64),

    #[error("normalizer scale {0} is not positive")]
    NonPositiveLambda(f64),

    #[error("logarithm failed: {0}")]
    LogarithmFailure(String),

    #[error("Cartan decomposition requires sigma > 0, got {0}")]
    UnsupportedSigma(f64),

    #[error("invalid pairing of case {case} with sigma {sigma}")]
    InvalidCase { case: String, sigma: String },

    #[error("classification result is not kinematical: {0}")]
    NotKinematical(String),

    #[error("vector is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("matrix is not in K (residual {0:.3e})")]
    NotInK(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
