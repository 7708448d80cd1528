//! Configuration, presets, table reproduction and serialization for the
//! `selfrec` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod validation;

pub use config::{parse_config, ExperimentConfig};
pub use error::{CliError, Result};
pub use validation::{run_validation_table, ValidationRow};
