use thiserror::Error;

/// Errors raised by the geometry, solver, estimation and evaluation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The division model maps the point to infinity (`|1 + λr²| ≤ 1e-12`).
    #[error("point is mapped to infinity by the undistortion model")]
    DegeneratePoint,
    /// Positive λ with `1 − 4λr_u² < 0`: the undistorted radius has no distorted preimage.
    #[error("no real distorted preimage for undistorted radius")]
    NoRealPreimage,
    /// The constraint gradient vanishes, so the Sampson residual is undefined.
    #[error("epipolar constraint gradient vanishes")]
    ZeroGradient,
    #[error("numerical decomposition failed to converge")]
    ConvergenceFailure,
    #[error("matrix is numerically rank deficient")]
    RankDeficient,
    #[error("all polynomial coefficients are zero")]
    AllZeroCoefficients,
    #[error("degenerate sample")]
    DegenerateSample,
    #[error("insufficient correspondences: need {needed}, got {got}")]
    InsufficientCorrespondences { needed: usize, got: usize },
    #[error("no model passed gating in any iteration")]
    NoModelFound,
    #[error("essential matrix decomposition is ambiguous")]
    DecompositionAmbiguous,
    #[error("zero-length vector")]
    ZeroVector,
    #[error("empty input")]
    EmptyInput,
    #[error("scene generation exhausted its re-sampling budget")]
    GenerationFailure,
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
