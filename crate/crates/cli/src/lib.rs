//! Command implementations behind the `memlab` binary.

pub mod analyses;
pub mod analyze;
pub mod config;
pub mod demo;
pub mod error;
pub mod report;
pub mod simulate;

pub use error::{CliError, CliResult};
