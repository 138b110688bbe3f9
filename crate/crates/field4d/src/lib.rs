//! Spatio-temporal ("4D") reconstruction of row-structured fields.
//!
//! A field is traversed row by row, once per collection session. Each
//! (session, row) pair is reconstructed by multi-sensor SLAM (vision,
//! IMU, GPS) on a factor graph, the per-row results are stitched by
//! robust wide-baseline data association, and a joint optimization
//! registers every row of every session into one world frame. Crop
//! statistics (canopy height over time) are then read straight off the
//! registered point clouds.
//!
//! The crate ships a synthetic field simulator with full ground truth,
//! which backs the test suite and the `field4d` CLI end to end.

pub mod analysis;
pub mod error;
pub mod factorgraph;
pub mod fourd;
pub mod frontend;
pub mod geometry;
pub mod io;
pub mod sensors;
pub mod simulator;

pub use error::{Error, Result};
