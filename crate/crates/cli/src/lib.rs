// SPDX-License-Identifier: Apache-2.0

//! Experiment harness behind the `hdcam` binary: configuration, the k-mer
//! database file format, genome download and the subcommand bodies.

pub mod commands;
pub mod config;
pub mod dbfile;
pub mod error;
pub mod fetch;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
