use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("pole: {0}")]
    Pole(String),

    #[error("series did not converge within {terms} terms (last error estimate {estimate:e})")]
    NonConvergence { terms: usize, estimate: f64 },

    #[error("overflow in {0}")]
    Overflow(&'static str),

    #[error("transform tail unbounded: {0}")]
    TailUnbounded(String),

    #[error("numerical inversion lost all significant digits at t = {t} (cancellation ratio {ratio:e})")]
    NumericalBlowup { t: f64, ratio: f64 },

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("invalid parameter `{key}`: {detail}")]
    InvalidParameter { key: String, detail: String },

    #[error("cumulant diverges: theta = {theta} is not below the exponential tilt {tilt}")]
    DivergentCumulant { theta: f64, tilt: f64 },

    #[error("closed form unavailable: {0}")]
    ClosedFormUnavailable(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("marginal density unavailable: {0}")]
    MarginalUnavailable(String),

    #[error("quadrature budget exceeded: partial value {partial} with error bound {bound:e}")]
    BudgetExceeded { partial: f64, bound: f64 },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("empty series")]
    EmptySeries,

    #[error("degenerate moments: {0}")]
    DegenerateMoments(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { func, detail: detail.into() }
    }

    pub(crate) fn param(key: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::InvalidParameter { key: key.into(), detail: detail.into() }
    }
}
