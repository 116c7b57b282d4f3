use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid size {nx}x{ny}x{nz}: horizontal counts must be even and >= 4, vertical count >= 4")]
    GridSize { nx: usize, ny: usize, nz: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    Precondition(String),

    #[error("tridiagonal solve broke down (pivot {pivot:e} at row {row})")]
    Tridiagonal { row: usize, pivot: f64 },

    #[error("advective CFL violated: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("expected {expected} Brownian increments, got {got}")]
    IncrementLength { expected: usize, got: usize },

    #[error("coefficient field has nonzero normal trace {0:e} at the plates")]
    PlateTrace(f64),

    #[error("sampling instants of the path and the reference trajectory do not line up")]
    Misaligned,

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
