use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {field} {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{0}")]
    Usage(String),

    #[error(
        "truncation leakage {leakage:.3e} at t = {t} exceeds trunc_tol {tol:.1e}; increase n_max"
    )]
    Truncation { leakage: f64, tol: f64, t: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("quadrature did not converge: achieved error estimate {achieved:.3e} (requested {requested:.1e})")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
