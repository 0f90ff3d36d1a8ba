//! Exact and truncated simulation of Dirichlet means, OU-Gamma and OU-GGC
//! stochastic volatility models, option pricing and calibration.

pub mod calibration;
pub mod cftp;
pub mod error;
pub mod ggc;
pub mod mc;
pub mod model;
pub mod pricing;
pub mod rng;
pub mod stats;
pub mod truncation;
pub mod validation;

pub use error::{Error, Result};
pub use rng::RandomStream;
