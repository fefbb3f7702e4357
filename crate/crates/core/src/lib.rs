//! Excess-mass tests for the number of modes of a circular density, with a
//! bootstrap calibrated on a modified kernel density estimate, plus a
//! spatially aware hierarchical FDR procedure for running the test over a
//! grid of cells.

pub mod calibration;
pub mod circular;
pub mod concentration;
pub mod error;
pub mod excess_mass;
pub mod kde;
pub mod mixture;
pub mod models;
pub mod pipeline;
pub mod quadrature;
pub mod rng;
pub mod spatial;
pub mod special;
pub mod study;
pub mod testing;

pub use circular::{wrapped_distance, Angle, CircularSample};
pub use error::{Error, Result};
pub use kde::{find_turning_points, KdeFamily, KdeModel, TurningPointSet};
