use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("site {site} out of range for a layout with {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("unphysical damping matrix: |gamma12| = {gamma12} exceeds 1")]
    UnphysicalDamping { gamma12: f64 },

    #[error(
        "steady-state system is singular or ill-conditioned \
         (condition estimate {condition_estimate:.3e}, residual {residual:.3e})"
    )]
    SingularSystem { condition_estimate: f64, residual: f64 },

    #[error("propagation failed at tau = {tau} after {steps} steps: {message}")]
    Integrator {
        tau: f64,
        steps: usize,
        message: String,
    },

    #[error("undefined correlation: sensor population {population:.3e} below floor")]
    UndefinedCorrelation { population: f64 },

    #[error("radiated intensity vanishes, normalised correlations are undefined")]
    ZeroIntensity,

    #[error("first-order coherence has not decayed by tau = {tau_max} (residual {residual:.3e})")]
    NonDecaying { tau_max: f64, residual: f64 },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in flagged result rows.
    pub fn reason_code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension",
            Error::SiteOutOfRange { .. } => "site-range",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::UnphysicalDamping { .. } => "unphysical-damping",
            Error::SingularSystem { .. } => "singular",
            Error::Integrator { .. } => "integrator",
            Error::UndefinedCorrelation { .. } => "undefined-correlation",
            Error::ZeroIntensity => "zero-intensity",
            Error::NonDecaying { .. } => "non-decaying",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Numerical(_) => "numerical",
        }
    }
}
