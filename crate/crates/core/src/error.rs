use thiserror::Error;

/// Errors raised by model construction and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid family spec `{spec}`: {reason}")]
    FamilySpec { spec: String, reason: String },

    #[error("U'(v) vanishes at v = {0}")]
    DegenerateDerivative(f64),

    #[error("density vanishes at threshold t = {0}")]
    ZeroDensity(f64),

    #[error("rate function is identically zero for `{0}`; rate sweeps need |A(v)| > 0")]
    DegenerateRate(String),

    #[error("tail diagnostic undefined for gamma = 0")]
    GammaZero,

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value:e}, error {error:e}")]
    QuadratureNotConverged { a: f64, b: f64, value: f64, error: f64 },

    #[error("non-finite integrand value at x = {0}")]
    NonFiniteIntegrand(f64),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("too many failed grid points: {failed} of {total}")]
    SweepFailed { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::NonFiniteIntegrand(_)
                | Error::SweepFailed { .. }
        )
    }
}
