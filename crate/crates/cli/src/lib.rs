//! Experiment runner behind the `stochdom` binary: config parsing, per-run
//! outputs and the two-sample dominance comparison.

pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
