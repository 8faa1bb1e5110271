//! Command-line front end: configuration parsing, dispatch to the analysis
//! library, CSV output and minimal SVG renderings.

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::{run, Outcome};
pub use config::{parse_config, Command, RunConfig, UsageError};
