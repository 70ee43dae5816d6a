use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("seed is required to be isotropic but bdot(seed, seed) has relative residual {residual:e}")]
    NonIsotropicSeed { residual: f64 },

    #[error("degenerate point (u, v) = ({u}, {v}): {reason}")]
    Degenerate { u: f64, v: f64, reason: String },

    #[error("frame gauge discontinuity near (u, v) = ({u}, {v}); use a smaller step")]
    GaugeDiscontinuity { u: f64, v: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("all {0} samples were degenerate")]
    AllDegenerate(usize),

    #[error(
        "finite-difference step {step} is too large for the local curvature scale \
         (Richardson mismatch {coarse:e} vs {fine:e}); retry with a smaller step"
    )]
    StepTooLarge { step: f64, coarse: f64, fine: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn degenerate(u: f64, v: f64, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            u,
            v,
            reason: reason.into(),
        }
    }

    /// True for errors that mean "this sample point is unusable", as opposed
    /// to errors in the inputs themselves.
    pub fn is_degenerate_sample(&self) -> bool {
        matches!(
            self,
            Error::Degenerate { .. } | Error::NotPositiveDefinite | Error::GaugeDiscontinuity { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
