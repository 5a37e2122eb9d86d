use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Which class constraint a star shape broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
    Smoothness,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Lower => f.write_str("lower radial bound b0"),
            Bound::Upper => f.write_str("upper radial bound b1 - delta"),
            Bound::Smoothness => f.write_str("C2 norm bound m"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape violates the {bound} at theta = {theta:.6} (value {value:.6e})")]
    ConstraintViolation { bound: Bound, theta: f64, value: f64 },

    #[error("invalid grid resolution {n}: {reason}")]
    InvalidResolution { n: usize, reason: &'static str },

    #[error("resolution {n} below the minimum {min} for kernel assembly")]
    ResolutionTooLow { n: usize, min: usize },

    #[error("Neumann function evaluated at coincident points")]
    SingularEvaluation,

    #[error("source point at |z| = {norm:.6} lies outside the open unit disk")]
    DomainViolation { norm: f64 },

    #[error("target ({x:.4}, {y:.4}) is {distance:.3e} from the inclusion boundary (minimum {min:.3e})")]
    TargetTooClose {
        x: f64,
        y: f64,
        distance: f64,
        min: f64,
    },

    #[error("eigenvalues not resolved: {0}")]
    NotConverged(String),

    #[error("contrast k = {k} is within {gap:.3e} of a resonance")]
    NearResonance { k: Complex64, gap: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("Neumann datum must have zero mean (got {mean:.3e})")]
    NonZeroMean { mean: f64 },

    #[error("profile value k = {k} at omega = {omega} touches the closed negative real axis")]
    InvalidProfile { omega: f64, k: Complex64 },

    #[error("need at least {needed} distinct frequencies, got {got}")]
    InsufficientFrequencies { needed: usize, got: usize },

    #[error("rational fit residual {residual:.3e} above tolerance {tol:.3e} with {poles} poles")]
    FitDiverged {
        residual: f64,
        tol: f64,
        poles: usize,
    },

    #[error("limit value has imaginary part {imag:.3e} above tolerance {tol:.3e}")]
    NonRealLimit { imag: f64, tol: f64 },

    #[error("contour passes within {distance:.3e} of a pole or encloses the evaluation point")]
    ContourCrossesPole { distance: f64 },

    #[error("inversion diverged: misfit increased for every trial step")]
    Diverged {
        best: Box<crate::reconstruct::InversionResult>,
    },

    #[error("Cauchy data has no inclusion constant")]
    MissingRho,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let msg = e.to_string();
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => Error::Parse(msg),
        }
    }
}

impl Error {
    /// True for failures caused by malformed input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::ConstraintViolation { .. }
                | Error::InvalidResolution { .. }
                | Error::ResolutionTooLow { .. }
                | Error::InvalidProfile { .. }
                | Error::NonZeroMean { .. }
                | Error::DimensionMismatch(_)
                | Error::Json(_)
                | Error::Parse(_)
        )
    }
}
