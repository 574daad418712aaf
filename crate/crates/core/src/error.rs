use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel is not cut off: {0}")]
    NonCutoff(String),

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("cannot classify kernel singularity: {0}")]
    Classification(String),

    #[error("quadrature did not converge: value {value:e}, estimated error {residual:e} (tolerance {tolerance:e})")]
    Quadrature { value: f64, residual: f64, tolerance: f64 },

    #[error("numerical estimate exceeds tolerance: {what} (estimate {estimate:e}, tolerance {tolerance:e})")]
    Numeric { what: String, estimate: f64, tolerance: f64 },

    #[error("Picard iteration did not converge in {iterations} iterations (last update {last_update:e})")]
    PicardNoConvergence { iterations: usize, last_update: f64 },

    #[error("growth bound violated at t = {time}: measured {measured:e} > bound {bound:e}")]
    GrowthBound { time: f64, measured: f64, bound: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid characteristic function: {0}")]
    InvalidCharFn(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
