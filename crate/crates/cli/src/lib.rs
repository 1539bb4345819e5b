//! Command-line driver: configuration, orchestration and result files.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_command, Command, Outcome};
pub use config::{ConfigError, RunConfig};

/// Environment variable naming the output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "SYMBIOSIS_OUT_DIR";
