//! Experiment harness: config parsing, deterministic artifact emission, and
//! the drivers behind the `griffith-beam` binary.

pub mod config;
pub mod experiments;
pub mod report;
