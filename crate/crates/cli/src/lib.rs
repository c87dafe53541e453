//! Command-line front end to `pcurve-core`: study files, pool files, the
//! parallel harness, CSV tables and SVG plots.

pub mod config;
pub mod curves;
mod error;
pub mod harness;
pub mod output;
pub mod plot;
pub mod pool_io;

pub use error::CliError;
