use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} lies outside the grid domain{}", series.as_ref().map(|s| format!(" (series {s})")).unwrap_or_default())]
    OutOfDomain {
        point: Vec<f64>,
        series: Option<String>,
    },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("coordinate {coordinate} has zero variance")]
    ZeroVariance { coordinate: usize },

    #[error("covariance has rank {rank}, need at least {required}")]
    DegenerateCovariance { rank: usize, required: usize },

    #[error("transition probability from an unoccupied cell {cell} is undefined")]
    UndefinedProbability { cell: u64 },

    #[error("relation contains a cycle through node {node}")]
    Cycle { node: usize },

    #[error("integration produced a non-finite state")]
    NonFiniteState,

    #[error("integration blew up in series {series} at step {step}")]
    Blowup { series: usize, step: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no threshold up to {mu_max} splits the dominant Morse set below ratio {ratio_bound}")]
    ThresholdNotFound {
        mu_max: u64,
        ratio_bound: f64,
        curve: Vec<(u64, f64)>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
