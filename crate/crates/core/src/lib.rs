//! Exponential-Lévy asset-price models.
//!
//! Characteristic functions and Lévy triplets for eight model families,
//! path simulation, three European pricing engines (Laplace-transform
//! inversion, a PIDE solver and Monte Carlo), Esscher measure changes and
//! calibration to implied-volatility quotes or return series.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod calibrate;
pub mod error;
pub mod levy;
pub mod measure_change;
pub mod models;
pub mod numerics;
pub mod pricing;
pub mod simulate;

pub use error::{Error, Result};
