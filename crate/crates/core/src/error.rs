use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("record {index}: time {time} is negative or not finite")]
    NegativeTime { index: usize, time: f64 },
    #[error("record {index}: cause {cause} with status {status} is out of range for {num_causes} causes")]
    CauseOutOfRange {
        index: usize,
        cause: usize,
        status: u8,
        num_causes: usize,
    },
    #[error("record {index}: expected {expected} covariates, found {found}")]
    InconsistentCovariateLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {index}: covariate {column} is not finite")]
    NonFiniteCovariate { index: usize, column: usize },
    #[error("cause {0} has no observed events")]
    EmptyCause(usize),
    #[error("number of causes must be at least 1")]
    NoCauses,
    #[error("covariate column {0} is constant; its coefficient is not identifiable")]
    ConstantCovariate(usize),
    #[error("unknown link `{0}` (expected ph, po or log:<r>)")]
    UnknownLink(String),
    #[error("empty risk set at time {time}")]
    EmptyRiskSet { time: f64 },
    #[error("could not bracket baseline root at time {time}")]
    NoBracket { time: f64 },
    #[error("baseline curve does not match the cause-{cause} event times")]
    CurveMismatch { cause: usize },
    #[error("no convergence after {iterations} iterations (score norm {score_norm:e})")]
    NonConvergence { iterations: usize, score_norm: f64 },
    #[error("singular score jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },
    #[error("singular information matrix (condition estimate {condition:e})")]
    SingularInformation { condition: f64 },
    #[error("zero denominator in weighted covariate mean at time {time}")]
    ZeroDenominator { time: f64 },
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{failed} of {total} bootstrap replicates failed")]
    TooManyFailedReplicates { failed: usize, total: usize },
    #[error("{failed} of {total} Monte Carlo replications failed")]
    TooManyFailedFits { failed: usize, total: usize },
    #[error("censoring target {target} cannot be reached")]
    CalibrationFailed { target: f64 },
    #[error("expected covariate vector of length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(
        "covariate pattern `{pattern}` has {found} values, the fit has {expected} coefficients"
    )]
    PatternDimensionMismatch {
        pattern: String,
        expected: usize,
        found: usize,
    },
    #[error("time grid is not sorted ascending")]
    UnsortedGrid,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    UnparsableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("no usable rows after dropping missing values")]
    EmptyAfterFiltering,
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Variant name, for structured error messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "EmptyDataset",
            Error::NegativeTime { .. } => "NegativeTime",
            Error::CauseOutOfRange { .. } => "CauseOutOfRange",
            Error::InconsistentCovariateLength { .. } => "InconsistentCovariateLength",
            Error::NonFiniteCovariate { .. } => "NonFiniteCovariate",
            Error::EmptyCause(..) => "EmptyCause",
            Error::NoCauses => "NoCauses",
            Error::ConstantCovariate(..) => "ConstantCovariate",
            Error::UnknownLink(..) => "UnknownLink",
            Error::EmptyRiskSet { .. } => "EmptyRiskSet",
            Error::NoBracket { .. } => "NoBracket",
            Error::CurveMismatch { .. } => "CurveMismatch",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::SingularJacobian { .. } => "SingularJacobian",
            Error::SingularInformation { .. } => "SingularInformation",
            Error::ZeroDenominator { .. } => "ZeroDenominator",
            Error::InvalidConfig(..) => "InvalidConfig",
            Error::TooManyFailedReplicates { .. } => "TooManyFailedReplicates",
            Error::TooManyFailedFits { .. } => "TooManyFailedFits",
            Error::CalibrationFailed { .. } => "CalibrationFailed",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::PatternDimensionMismatch { .. } => "PatternDimensionMismatch",
            Error::UnsortedGrid => "UnsortedGrid",
            Error::MissingColumn(..) => "MissingColumn",
            Error::UnparsableValue { .. } => "UnparsableValue",
            Error::EmptyAfterFiltering => "EmptyAfterFiltering",
            Error::Io(..) => "Io",
            Error::Parse(..) => "Parse",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
