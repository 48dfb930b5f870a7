//! Numerical verification of Carleman estimates, weighted resolvent bounds and
//! logarithmic local energy decay for waves with rough radial wavespeeds.
//!
//! Everything is radial: functions on `ℝⁿ` are reduced per spherical-harmonic
//! mode `ℓ` to `ũ = r^{(n−1)/2}u` on a uniform grid of `(0, r_max)`.

pub mod analysis;
pub mod carleman;
pub mod decay;
pub mod error;
pub mod model;
pub mod quad;
pub mod resolvent;
pub mod specfun;

pub use error::{Error, Result};
