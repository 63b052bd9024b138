use thiserror::Error;

/// Errors produced by the graph-root library.
#[derive(Debug, Error)]
pub enum GrdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested dims ({p1}, {p2}) exceed available ({avail_pos} positive, {avail_neg} negative)")]
    DimensionOverflow {
        p1: usize,
        p2: usize,
        avail_pos: usize,
        avail_neg: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("sinkhorn did not converge in {0} iterations")]
    NotConverged(usize),

    #[error("decay fit unavailable: {0}")]
    FitUnavailable(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GrdError>;
