//! Command-line front end: configuration parsing and run orchestration.

pub mod config;
pub mod run;

pub use config::{parse_config, to_toml, ConfigError, OutputPaths, RunConfig, Tolerances};
pub use run::{check, run, RunReport};
