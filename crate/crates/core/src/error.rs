use thiserror::Error;

/// Errors raised by the estimation pipeline, the experiment harness and the CLI.
#[derive(Debug, Error)]
pub enum SdrError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry: {0}")]
    NonFinite(String),

    #[error("covariance is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error(
        "inputs are not standardized; SIR and SAVE require zero-mean, identity-covariance \
         predictors (standardization assumption). Standardize the sample set first"
    )]
    NotStandardized,

    #[error("more slices than samples ({slices} slices, {samples} samples)")]
    TooManySlices { slices: usize, samples: usize },

    #[error("n exceeds input dimension (n = {n}, m = {m})")]
    DimensionTooLarge { n: usize, m: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown function '{0}' (expected quad1, quad3 or hartmann)")]
    UnknownFunction(String),

    #[error("invalid sample set: {0}")]
    InvalidSampleSet(String),

    #[error("trial {trial} at N = {n} failed: {source}")]
    TrialFailed {
        n: usize,
        trial: usize,
        #[source]
        source: Box<SdrError>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SdrError {
    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        match self {
            SdrError::DimensionMismatch(_)
            | SdrError::NotStandardized
            | SdrError::TooManySlices { .. }
            | SdrError::DimensionTooLarge { .. }
            | SdrError::InvalidArgument(_)
            | SdrError::UnknownFunction(_)
            | SdrError::InvalidSampleSet(_)
            | SdrError::NotPositiveDefinite
            | SdrError::Csv(_)
            | SdrError::Json(_) => true,
            SdrError::NonFinite(_) | SdrError::TrialFailed { .. } | SdrError::Io(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SdrError>;
