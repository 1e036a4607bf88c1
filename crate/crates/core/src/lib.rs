//! Overbounding of range-domain error distributions with Cauchy-Gaussian
//! models, baseline Gaussian and NavDEN bounds, and position-domain
//! protection levels by discretized convolution.

pub mod baselines;
pub mod dfo;
pub mod dist;
pub mod empirical;
pub mod error;
pub mod nsu;
pub mod numeric;
pub mod paired;
pub mod posdom;
pub mod record;
pub mod simkit;
pub mod su;

pub use error::{Error, Result};
