use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {}: {reason}", path.display())]
    Input { path: PathBuf, reason: String },
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn input(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        CliError::Input {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Output {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad configuration, 2 for unreadable or unwritable data, 3 when a
    /// library contract is violated.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Input { .. } | CliError::Output { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<fisheye_mc::motion::MotionError> for CliError {
    fn from(e: fisheye_mc::motion::MotionError) -> Self {
        use fisheye_mc::motion::MotionError;
        match e {
            MotionError::InvalidConfig(_) | MotionError::UnsupportedViewport { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<fisheye_mc::metrics::MetricsError> for CliError {
    fn from(e: fisheye_mc::metrics::MetricsError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<fisheye_mc::sideinfo::SideInfoError> for CliError {
    fn from(e: fisheye_mc::sideinfo::SideInfoError) -> Self {
        use fisheye_mc::sideinfo::SideInfoError;
        match e {
            SideInfoError::UnknownBackend(_) => CliError::Config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<fisheye_mc::geometry::GeometryError> for CliError {
    fn from(e: fisheye_mc::geometry::GeometryError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<fisheye_mc::synth::SynthError> for CliError {
    fn from(e: fisheye_mc::synth::SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}
