use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A preset or sample set violates one of the profile invariants.
    #[error("profile violates {invariant}: {detail}")]
    InvalidProfile { invariant: String, detail: String },

    #[error("profile is not usable: failed checks [{failed}]")]
    UnusableProfile { failed: String },

    #[error("non-finite {quantity} at node {node} (r = {r})")]
    NonFinite {
        quantity: &'static str,
        node: usize,
        r: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid too coarse: N = {n}, need at least {min}")]
    GridTooCoarse { n: usize, min: usize },

    #[error("zero field: the quotient is undefined")]
    ZeroField,

    #[error("non-exact field: integral over the period is {integral:e}, field is not a gradient")]
    NonExactField { integral: f64 },

    #[error("field must vanish at the poles (found {value:e} at node {node})")]
    PoleValue { node: usize, value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A configuration value is malformed or out of range; `path` is the
    /// JSON path of the offending value.
    #[error("config error at {path}: {detail}")]
    Config { path: String, detail: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("curvature hypothesis not met: kappa2 = {kappa2}")]
    HypothesisNotMet { kappa2: f64 },
}

impl LabError {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::InvalidArgument(_) => "invalid_argument",
            LabError::InvalidProfile { .. } => "invalid_profile",
            LabError::UnusableProfile { .. } => "unusable_profile",
            LabError::NonFinite { .. } => "non_finite",
            LabError::GridMismatch(_) => "grid_mismatch",
            LabError::GridTooCoarse { .. } => "grid_too_coarse",
            LabError::ZeroField => "zero_field",
            LabError::NonExactField { .. } => "non_exact_field",
            LabError::PoleValue { .. } => "pole_value",
            LabError::NonConvergence { .. } => "non_convergence",
            LabError::Config { .. } => "config",
            LabError::Io(_) => "io",
            LabError::HypothesisNotMet { .. } => "hypothesis_not_met",
        }
    }
}
