use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("data too short: need at least {needed} samples, got {available}")]
    DataTooShort { needed: usize, available: usize },

    #[error(
        "singular KKT system: constraint matrix has rank {rank} < {rows} rows (condition estimate {condition:.3e})"
    )]
    SingularKkt { rank: usize, rows: usize, condition: f64 },

    #[error("lambda undefined: ||g|| = 0 while the online noise variance is positive")]
    ZeroWarmStart,

    #[error("zero reference norm in discrepancy")]
    ZeroDenominator,

    #[error("infeasible bounds at index {index}: lower {lower} > upper {upper}")]
    InfeasibleBounds { index: usize, lower: f64, upper: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
