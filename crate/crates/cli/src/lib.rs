//! Experiment harness: TOML configs, seeded runs, λ sweeps and CSV output.

pub mod config;
pub mod experiment;
pub mod output;
