//! Batch front-end: JSON configuration, figure presets, and deterministic
//! CSV + JSON sidecar output.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
pub mod units;

pub use commands::{run, Outcome, RunError};
pub use config::{parse_config, Command, ConfigError, RunConfig};
