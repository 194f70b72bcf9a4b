//! Command-line front end: configuration, backend wiring and subcommands.

pub mod backends;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{run, Cli};
pub use error::CliError;
