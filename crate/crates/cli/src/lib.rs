//! Command-line workflows: data generation, training, evaluation and analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

pub use commands::run;
pub use config::{parse_config_text, Command, RunConfig};
pub use error::CliError;

/// Epoch count restored by `--paper-scale`.
pub const FULL_SCALE_EPOCHS: u64 = 100_000;
