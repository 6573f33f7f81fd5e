//! File formats, run configuration and command implementations behind the
//! `hypergrid` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use error::{CliError, Result};
