use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The step controller could not find an acceptable step above `h_min`.
    #[error("step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    #[error("non-finite value in right-hand side at t = {t}, x = {x}")]
    Numeric { t: f64, x: f64 },

    /// The fitted exponential rate is not positive.
    #[error("solution is not hyperbolic (fitted rate {beta})")]
    NotHyperbolic { beta: f64 },

    #[error("numeric inconsistency: {0}")]
    Inconsistency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error comes from the integrator itself.
    pub fn is_integration_failure(&self) -> bool {
        matches!(self, Error::Stiffness { .. } | Error::Numeric { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
