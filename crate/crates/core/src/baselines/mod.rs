//! Reference overbounds the Cauchy-Gaussian models are compared against.

pub mod navden;
pub mod two_step;

pub use navden::{NavDenBound, NavDenParams, NavDenRow, Region};
pub use two_step::{fit_two_step, TwoStepBound, TwoStepConfig, TwoStepReport};
