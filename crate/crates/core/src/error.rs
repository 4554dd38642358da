use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A weight vector picked up a NaN or infinite component.
    #[error("non-finite value in {0} weights")]
    NonFinite(&'static str),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("behavior chain is not irreducible")]
    NotIrreducible,

    /// The relative-error metric is undefined when a true value sits at zero.
    #[error("degenerate target: |V*({state})| = {value:e} is below the floor")]
    DegenerateTarget { state: usize, value: f64 },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
