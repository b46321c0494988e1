//! Command implementations behind the `whatif` binary and the local HTTP
//! workbench used by the timeline UI.

pub mod commands;
pub mod serve;

pub use commands::{CliError, OutputFormat};
