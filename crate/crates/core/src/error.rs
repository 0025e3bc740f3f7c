use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to choose an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters, malformed files, grids that violate preconditions.
    Input,
    /// A numerical procedure failed to produce a trustworthy value.
    Numerical,
    /// A computed result violates a property it must satisfy.
    Invariant,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("non-finite value in {context} at {at:e}")]
    NonFinite { context: &'static str, at: f64 },

    #[error("{context}: quadrature did not converge (error estimate {abs_error:e})")]
    Quadrature { context: &'static str, abs_error: f64 },

    #[error("indeterminate limit: {0}")]
    Indeterminate(String),

    #[error("{method} inversion failed at t = {t:e}: {reason}")]
    Inversion {
        method: &'static str,
        t: f64,
        reason: String,
    },

    #[error("singular medium: Q(p) vanishes at p = {re:e}{im:+e}i")]
    SingularMedium { re: f64, im: f64 },

    #[error("first-kind Volterra system is ill-conditioned (condition estimate {condition:e}); use the transform-path result")]
    IllConditioned { condition: f64 },

    #[error("green's function integral: {0}")]
    Integration(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("model file: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::Input(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Config(_) => ErrorKind::Input,
            Error::Invariant(_) => ErrorKind::Invariant,
            _ => ErrorKind::Numerical,
        }
    }
}
