// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use thiserror::Error;

/// Failures surfaced by the command-line front end. Each class maps to a
/// fixed process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("format error: {0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Network(_) => 4,
            CliError::Format(_) => 5,
        }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<hdcam_core::Error> for CliError {
    fn from(err: hdcam_core::Error) -> Self {
        use hdcam_core::Error as E;
        match err {
            E::Fasta { .. }
            | E::KTooLarge { .. }
            | E::AmbiguousBase { .. }
            | E::UndecodableGroup { .. }
            | E::NoKmers
            | E::ReadLength { .. }
            | E::ReadPastEnd { .. }
            | E::PackedLength { .. }
            | E::DirtyPadding { .. }
            | E::WidthMismatch { .. }
            | E::Underdetermined(_)
            | E::BadCalibrationTable(_) => CliError::Format(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Format(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Format(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
