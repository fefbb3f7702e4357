use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample must contain at least one angle")]
    EmptySample,

    #[error("angle {0} is not finite")]
    NonFiniteAngle(f64),

    #[error("concentration {0} outside (0, 1)")]
    InvalidConcentration(f64),

    #[error("kernel density is numerically flat; no turning points")]
    DegenerateDensity,

    #[error("invalid mode count k={k} for a sample of size n={n}")]
    InvalidK { k: usize, n: usize },

    #[error("brute-force enumeration limited to n <= {limit}, got n={n}")]
    TooLarge { n: usize, limit: usize },

    #[error("model fit failed: {0}")]
    FitFailure(String),

    #[error("density at turning point {0} is numerically zero")]
    ZeroDensity(f64),

    #[error("calibration neighbourhoods still collide after {0} retries")]
    CollidingNeighborhoods(usize),

    #[error("adaptive quadrature did not converge")]
    QuadratureFailure,

    #[error("land-cover raster is empty")]
    EmptyRaster,

    #[error("data span {observed} years differs from configured span {configured}")]
    SpanMismatch { observed: i32, configured: i32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no events to process")]
    NoEvents,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}
