//! Batch front end for the OU drift estimation experiments: configuration,
//! subcommands, versioned CSV output and Markdown reports.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod report;

pub use config::{Emit, Overrides, RunConfig, SimulateConfig};
pub use csvio::{Table, SCHEMA_LINE};
pub use error::{CliError, Result};
