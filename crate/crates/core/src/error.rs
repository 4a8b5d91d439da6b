use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("empty input")]
    EmptyInput,
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not symmetric")]
    NotSymmetric,
    #[error("covariance matrix is not positive definite")]
    NotSpd,
    #[error("uniform coordinate {0} outside (0, 1)")]
    OutOfRangeUniform(f64),
    #[error("column '{0}' is constant")]
    DegenerateColumn(String),
    #[error("output variance is degenerate (constant output)")]
    DegenerateVariance,
    #[error("rank statistic denominator is zero")]
    DegenerateDenominator,
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    InvalidLevel(f64),
    #[error("bootstrap unstable: {failed} of {total} replicates failed")]
    BootstrapUnstable { failed: usize, total: usize },
    #[error("continuous sensitive feature needs a Gaussian model for pick-freeze estimation")]
    MissingModel,
    #[error("this measure needs query access to the model function")]
    MissingModelFunction,
    #[error("group {group} has {size} rows, need at least {needed}")]
    GroupTooSmall {
        group: String,
        size: usize,
        needed: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("model evaluation failed: {0}")]
    Model(String),
}

impl Error {
    /// True for errors caused by malformed input or configuration, as opposed
    /// to failures during the computation itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Schema(_)
                | Error::EmptyInput
                | Error::NotSymmetric
                | Error::NotSpd
                | Error::OutOfRangeUniform(_)
                | Error::InvalidLevel(_)
                | Error::MissingModel
                | Error::MissingModelFunction
                | Error::InvalidArgument(_)
                | Error::LengthMismatch { .. }
                | Error::NonFiniteInput
        )
    }
}
