//! Experiment harness for `rmk-core`: configuration files, CSV dataset
//! formats, kernel timing and result tables behind the `rmk` binary.

pub mod bench;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiments;

pub use error::CliError;
