//! Command-line front end for `afc-core`: configuration parsing, CSV
//! artifacts and reference reproduction targets.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod commands;
pub mod config;
pub mod reproduce;

pub use commands::{run, CliError, Command, Context, Outcome};
pub use config::{parse_config, ConfigError, RunConfig};
