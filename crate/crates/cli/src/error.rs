use std::path::{Path, PathBuf};

use ellipse_calib::{FadingError, InferenceError, ScenarioError, SignalError};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const GATE_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Fading(#[from] FadingError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("{failed} of {total} MPCs exceed the error bound of {bound} m")]
    GateFailed { failed: usize, total: usize, bound: f64 },
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn schema(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    pub fn config(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::GateFailed { .. } => exit::GATE_FAILED,
            CliError::Usage(_) => exit::USAGE,
            CliError::Inference(e) => match e {
                InferenceError::InvalidConcentration(_) | InferenceError::InvalidGrid(_) => exit::USAGE,
                InferenceError::NumericalUnderflow(_) => exit::NUMERICAL,
                InferenceError::NonFiniteMeasurement(_) | InferenceError::Geometry(_) => exit::DATA,
            },
            CliError::Fading(FadingError::FitDiverged(_) | FadingError::InsufficientData(_)) => exit::NUMERICAL,
            CliError::Config { .. }
            | CliError::Schema { .. }
            | CliError::Mismatch(_)
            | CliError::Io { .. }
            | CliError::Scenario(_)
            | CliError::Fading(_)
            | CliError::Signal(_) => exit::DATA,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::schema("a.csv", "bad").exit_code(), 3);
        assert_eq!(CliError::Fading(FadingError::FitDiverged("x".into())).exit_code(), 4);
        assert_eq!(
            CliError::Inference(InferenceError::NumericalUnderflow(3)).exit_code(),
            4
        );
        assert_eq!(CliError::Signal(SignalError::EmptyIdleSet).exit_code(), 3);
        let gate = CliError::GateFailed {
            failed: 1,
            total: 2,
            bound: 0.1,
        };
        assert_eq!(gate.exit_code(), 1);
    }
}
