//! File formats, configuration, parallel Monte-Carlo and the experiment
//! drivers behind the `ps4pam` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod parallel;

pub use config::ExperimentConfig;
pub use error::CliError;

/// Tool version stamped into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
