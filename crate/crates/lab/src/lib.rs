//! File formats, experiment drivers and the `shortcut-lab` command line
//! on top of `shortcut-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod data;
mod error;
pub mod netjson;
pub mod tables;

pub use error::{LabError, LabResult};
