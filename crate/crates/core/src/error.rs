use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation at the source point is singular")]
    SingularEvaluation,

    #[error("retarded-time iteration did not converge within {iterations} iterations")]
    RetardedTimeDiverged { iterations: usize },

    #[error("power iteration did not converge within {iterations} iterations")]
    PowerIterationDiverged { iterations: usize },

    #[error("cannot scale noise to a positive level on a zero-signal matrix")]
    ZeroSignal,

    #[error("empty support")]
    EmptySupport,

    #[error("harmonic fit of degree {degree} is rank-deficient on this mesh")]
    RankDeficient { degree: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
