//! Geometric-optics simulation of a HyperSurface-coated corridor and the
//! beam-steering schedules that keep a walking user's uplink aligned with
//! the base station.

// Validation is written as `!(x > 0.0)` throughout so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod mobility;
pub mod scene;
pub mod steering;
pub mod tracer;

pub use error::{Error, Result};
pub mod config;
pub mod experiment;
