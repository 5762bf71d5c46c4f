use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate regression: annotations are constant across all {rows} stacked rows")]
    DegenerateRegression { rows: usize },

    #[error("entangler construction failed: smallest singular value {min_singular_value:e} <= 1e-10")]
    EntanglerConstruction { min_singular_value: f64 },

    #[error(
        "insufficient null space: requested k = {requested} content rows but only {available} \
         style-invariant directions exist (use k <= {available})"
    )]
    InsufficientNullSpace { requested: usize, available: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("training diverged at iteration {iteration}: loss is not finite")]
    TrainingDivergence { iteration: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure(_) | Error::EntanglerConstruction { .. } | Error::TrainingDivergence { .. })
    }
}
