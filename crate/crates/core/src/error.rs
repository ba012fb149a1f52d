use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid does not resolve the shell: {found} points in [r_inner, r_outer], need {required}")]
    UnresolvedShell { found: usize, required: usize },

    #[error("operator has a zero mode: {0}")]
    ZeroMode(&'static str),

    #[error("operator is not positive definite (pivot {pivot} = {value:e})")]
    NotPositive { pivot: usize, value: f64 },

    #[error("operator is not symmetric with respect to its measure (relative asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("eigensolver did not converge at index {index} (worst residual {residual:e})")]
    NoConvergence { index: usize, residual: f64 },

    #[error("matrix dimension {dim} exceeds the resource cap {cap}")]
    ResourceCap { dim: usize, cap: usize },

    #[error("evaluation point is outside the flat region")]
    OutsideFlatRegion,

    #[error("grids do not match: {0}")]
    GridMismatch(&'static str),

    #[error("node {0} is not available in this decomposition")]
    MissingNode(usize),

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(&'static str),

    #[error("operation not supported: {0}")]
    Unsupported(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
