//! Command-line front end: configuration, sweeps over distance, thickness
//! and skin depth, CSV/JSON tables and the built-in verification suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;
pub mod verify;

pub use error::{CliError, Result};
