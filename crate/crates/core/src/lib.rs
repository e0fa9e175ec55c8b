//! Stationarity testing for the empirical loss of two-layer ReLU networks.
//!
//! The crate computes Clarke, Frechet and limiting subdifferential sets via
//! per-unit chain-rule formulas, measures exact stationarity under the span
//! qualification, certifies near-approximate stationarity through neural
//! rounding, cross-checks everything against brute-force oracles, and ships
//! the 3SAT-based hardness constructions as executable reductions.

pub mod chain;
pub mod error;
pub mod exact;
pub mod hardness;
pub mod instances;
pub mod model;
pub mod numkit;
pub mod oracle;
pub mod robust;

pub use error::{Error, Result};
