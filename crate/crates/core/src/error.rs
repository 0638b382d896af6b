use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension n = {0}; grids exist for n = 2 and n = 3 only")]
    UnsupportedDimension(usize),

    #[error("fractional order sigma = {sigma} is not admissible for n = {n} (need 0 < sigma < n/2)")]
    InvalidOrder { n: usize, sigma: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid too coarse: exactness degree {exactness} but {required} is required")]
    GridTooCoarse { exactness: usize, required: usize },

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("left the trust region: {0}")]
    TrustRegion(String),

    #[error("positivity lost: {0}")]
    Negativity(String),

    #[error("insufficient concentration: {0}")]
    InsufficientConcentration(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("field vanishes on the boundary sphere: {0}")]
    BoundaryZero(String),

    #[error("classification failed: {0}")]
    Classification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
