//! Simulation, restoration and scoring toolkit for refractive water-surface
//! video distortion benchmarks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod field;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod refraction;
pub mod renderer;
pub mod restore;
pub mod rng;
pub mod wavefield;

pub use error::{Error, Result};
