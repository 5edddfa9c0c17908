use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (|m - m^dagger|_F = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error(
        "exact propagator did not converge after {doublings} step doublings \
         (last difference {last_difference:e} at {steps} steps)"
    )]
    NoConvergence {
        doublings: usize,
        steps: usize,
        last_difference: f64,
    },

    #[error("long-time QFI limit is degenerate: J and C both vanish")]
    DegenerateLimit,

    #[error("B_z is not identifiable on [{lo}, {hi}]: likelihood is flat")]
    Unidentifiable { lo: f64, hi: f64 },

    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
