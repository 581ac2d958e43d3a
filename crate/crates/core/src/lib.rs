//! Controlled factor-of-variation image benchmarks.
//!
//! Single-object images are rendered from six independent factors
//! (position, hue, lightness, scale, shape, texture). Studies fix which
//! target/correlate class combinations appear in training and testing, so a
//! predictor's reliance on shortcuts can be measured directly.

pub mod assets;
pub mod commands;
pub mod dataset_io;
pub mod error;
pub mod factor_model;
pub mod metrics;
pub mod probe;
pub mod renderer;
pub mod rng;
pub mod study;

pub use error::{Error, Result};
