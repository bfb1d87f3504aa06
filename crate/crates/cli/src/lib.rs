//! Command-line front end for the dynamical random-matrix toolkit.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

pub use config::RunConfig;
pub use error::CliError;
pub use manifest::RunManifest;
