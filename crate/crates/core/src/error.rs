use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("origin is not a grid node (x_min = {x_min}, dx = {dx})")]
    OriginMisaligned { x_min: f64, dx: f64 },

    #[error("outside the grid domain: {0}")]
    Domain(String),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("t = {t} is not a multiple of dx = {dx}")]
    Alignment { t: f64, dx: f64 },

    #[error("shift pushed mass {mass_lost:.3e} off the grid (tolerance {tolerance:.3e})")]
    Truncation { mass_lost: f64, tolerance: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("lambda = {lambda} lies within {distance:.3e} of a pole")]
    PoleProximity { lambda: String, distance: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("exponential Gram matrix has condition number {condition:.3e} (limit {limit:.1e})")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("function is not in the subspace (residual {residual:.3e})")]
    NotInSubspace { residual: f64 },

    #[error("index is indeterminate: {0}")]
    IndeterminateIndex(String),

    #[error("compression to the unitary part is not unitary (defect {defect:.3e})")]
    FailedReduction { defect: f64 },

    #[error("Riesz basis frame check failed: smallest singular value {sigma_min:.3e}")]
    IllConditionedBasis { sigma_min: f64 },

    #[error("request exceeds the memory budget: {0}")]
    Size(String),

    #[error("degenerate statistics: {0}")]
    Statistics(String),

    #[error("probe leaves the simulated horizon: {0}")]
    Horizon(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
