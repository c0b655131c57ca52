use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(&'static str),

    #[error("degenerate precoder: {0}")]
    DegeneratePrecoder(&'static str),

    #[error("adaptive power allocation diverged at iteration {iteration} (eta = {eta:e}); reduce the step size")]
    StepSize { iteration: usize, eta: f64 },

    #[error("exhaustive selection needs {required} candidates, budget is {budget}")]
    EnumerationBudget { required: u128, budget: u64 },

    #[error("unsupported scheme {scheme}: {reason}")]
    UnsupportedScheme { scheme: String, reason: &'static str },

    #[error("non-orthogonal pilots (max deviation {0:e}); pilot contamination is not modelled")]
    NonOrthogonalPilots(f64),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config validation failed for `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("unknown {kind} `{name}`; valid values: {valid}")]
    Unknown { kind: &'static str, name: String, valid: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter { field, reason: reason.into() }
}
