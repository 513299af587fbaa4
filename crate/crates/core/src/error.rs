use thiserror::Error;

use crate::grid::Representation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a field in {expected:?} representation, got {found:?}")]
    Representation {
        expected: Representation,
        found: Representation,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("grid does not resolve scale 1/n = {scale:.3e} (spacing {spacing:.3e}, need spacing <= {required:.3e})")]
    Resolution {
        scale: f64,
        spacing: f64,
        required: f64,
    },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("nonlinear phase per step {phase:.3e} exceeds guard {guard:.3e}")]
    StepSize { phase: f64, guard: f64 },

    #[error("time step underflow at t = {t:.6e} (dt = {dt:.3e})")]
    Stiffness {
        t: f64,
        dt: f64,
        partial: Box<crate::solver::Evolution>,
    },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
