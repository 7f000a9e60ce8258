//! Predicting how much training data a mode-based learner needs.
//!
//! The learner sees instances that fall into discrete *bins*; every instance
//! carries one of two *values*, and within each bin the more likely value has
//! a fixed probability `p`. Training collects instances per bin and predicts
//! each bin's most frequent value. This crate computes
//!
//! - exact expected accuracy under uniform bin probabilities ([`bounds::ea_uniform`]),
//! - the classical empty-bin / twice-optimal-error bounds ([`bounds::old_overall_bound`]),
//! - a cheap lower bound on the per-bin majority function ([`bounds::g_lower_bound`]),
//! - uniform and Zipf bin distributions with relevant-instance diagnostics
//!   ([`distributions`]),
//! - a seeded Monte Carlo simulator ([`simulator`]) to check all of the above.
//!
//! ```
//! use datareq::bounds::{ea_uniform, old_overall_bound};
//!
//! let exact = ea_uniform(40_000, 10_000, 0.9, 1e-12).unwrap();
//! assert!(exact.value > 0.85);
//! assert!(old_overall_bound(40_000, 10_000, 0.9) < exact.value);
//! ```

pub mod bounds;
pub mod cli;
pub mod distributions;
mod error;
pub mod export;
pub mod math;
pub mod simulator;

pub use error::{Error, Result};
