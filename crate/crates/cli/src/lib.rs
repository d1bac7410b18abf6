//! Command-line front end: run configuration, dataset manifests, image
//! I/O and the `train`, `predict`, `eval`, `inspect` and `synth` commands.
//!
//! All paths in configuration files and on the command line are resolved
//! against an explicit root directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod imageio;
pub mod manifest;

pub use error::{CliError, Result};
