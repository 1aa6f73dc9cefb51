use thiserror::Error;

/// Every failure the library can report.
///
/// Variants split into two groups: input problems (bad numbers, bad specs,
/// bad configs) and statistical problems (the data sit outside the regime
/// where an estimator is defined). [`Error::is_statistical`] tells them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row}: invalid value {value:?}: {reason}")]
    InvalidValue {
        row: usize,
        value: String,
        reason: &'static str,
    },

    #[error("sample is empty")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse distribution spec {0:?}: {1}")]
    SpecParse(String, String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("every observation is zero; the empirical Laplace transform is constant")]
    AllZeroSample,

    #[error("zero fraction {p_hat:.4} is at or above 1/e; asymptotic covariance is not available in this regime")]
    Regime { p_hat: f64 },

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("censored moments are degenerate (m1 = 0)")]
    DegenerateMoments,

    #[error("sample size {got} is below the minimum {needed} for this family")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("estimator is numerically undefined: {0}")]
    NearSingular(String),

    #[error("estimate is not finite: {0}")]
    NonFiniteEstimate(String),

    #[error("negative base {base:.3e} raised to non-integer power {exponent:.4}")]
    ComplexPower { base: f64, exponent: f64 },

    #[error("censoring point A = {0} makes log(A) vanish")]
    LogDomain(f64),

    #[error("tilted rejection acceptance rate {rate:.3e} is below 1e-6")]
    TiltedRejectionInfeasible { rate: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable snake_case identifier used in JSON error objects and failure tallies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidValue { .. } => "invalid_value",
            Error::EmptySample => "empty_sample",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::SpecParse(..) => "spec_parse",
            Error::Config { .. } => "config_error",
            Error::Unsupported(_) => "unsupported",
            Error::AllZeroSample => "all_zero_sample",
            Error::Regime { .. } => "regime_error",
            Error::InvalidRegime(_) => "invalid_regime",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::DegenerateMoments => "degenerate_moments",
            Error::SampleTooSmall { .. } => "sample_too_small",
            Error::NearSingular(_) => "near_singular",
            Error::NonFiniteEstimate(_) => "non_finite_estimate",
            Error::ComplexPower { .. } => "complex_power",
            Error::LogDomain(_) => "log_domain",
            Error::TiltedRejectionInfeasible { .. } => "tilted_rejection_infeasible",
            Error::Io(_) => "io_error",
        }
    }

    /// True for model/regime failures, false for malformed input.
    pub fn is_statistical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidValue { .. }
                | Error::EmptySample
                | Error::InvalidParameter(_)
                | Error::SpecParse(..)
                | Error::Config { .. }
                | Error::Unsupported(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
