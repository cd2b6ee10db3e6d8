use thiserror::Error;

use crate::grid::GridSpec;
use crate::legendre::Convexity;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid spec mismatch: {left:?} vs {right:?}")]
    GridMismatch { left: GridSpec, right: GridSpec },

    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("empty region: use Region::empty for an explicitly empty body")]
    EmptyRegion,

    #[error("field is not curl-free: relative curl residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotCurlFree { residual: f64, tol: f64 },

    #[error("{variant}: no single-valued gradient at {at:?}; query the subdifferential instead")]
    NotDifferentiable { variant: &'static str, at: [f64; 3] },

    #[error("{at:?} is outside the effective domain of {of}")]
    OutsideDomain { of: &'static str, at: [f64; 3] },

    #[error("prox unavailable: the augmented density of {variant} is not convex")]
    ProxNonConvex { variant: &'static str },

    #[error("smooth conjugate requires a gradient inverse")]
    MissingGradientInverse,

    #[error("numeric conjugate needs a gradient evaluator")]
    MissingGradient,

    #[error("conjugate search radius too small: best sample {at:?} lies on the scan boundary")]
    RadiusTooSmall { at: [f64; 3] },

    #[error("conjugand has no finite sample in the scan cube; supply scan hints or enlarge the radius")]
    NoFiniteSample,

    #[error("diamond transform is defined for convex or concave tags, got {0:?}; use smooth_conjugate")]
    NotConvexOrConcave(Convexity),

    #[error("involution check on a nonsmooth function requires a closed-form conjugate")]
    InvolutionNeedsConjugate,

    #[error("gradient inversion did not converge at {at:?} (residual {residual:.3e})")]
    InversionFailed { at: [f64; 3], residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("extended-real arithmetic attempted inf - inf")]
    InfMinusInf,

    #[error("set-valued constitutive map at node {node}: {reason}")]
    SetValued { node: usize, reason: String },

    #[error("residuals are undefined for {variant}")]
    ResidualUndefined { variant: &'static str },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
