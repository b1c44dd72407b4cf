//! Measurement-complexity analysis of iterative phase estimation.
//!
//! * [`numerics`]: arbitrary-precision binomial kernel.
//! * [`schemes`]: worst-case error and minimal sample counts per sampling scheme.
//! * [`pipelines`]: first-iteration compositions.
//! * [`planner`]: iteration planning for the improved algorithm.
//! * [`simulator`]: seeded Monte-Carlo runs of the estimation algorithms.
//! * [`tables`]: regeneration of the reference tables and comparison with the
//!   embedded golden values.

pub mod curves;
pub mod error;
pub mod exec;
pub mod numerics;
pub mod pipelines;
pub mod planner;
pub mod schemes;
pub mod simulator;
pub mod tables;

pub use error::{Error, Result};
pub use exec::Exec;
