use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("derivative of total order {order} needs analytic closures (finite differences stop at {limit})")]
    DerivativeOrder { order: usize, limit: usize },

    #[error("difference order {alpha} exceeds the {rows}x{cols} truncation")]
    Truncation {
        alpha: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pad exhausted: {0}")]
    PadExhausted(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("expression parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
