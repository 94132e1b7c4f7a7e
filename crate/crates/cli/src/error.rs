use std::path::PathBuf;

use fpsketch::stream::StreamError;
use fpsketch::SketchError;
use fpsketch_harness::HarnessError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Stream { path: PathBuf, source: StreamError },
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status. Usage errors share clap's code 2.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Stream { source: StreamError::Io(_), .. } => 1,
            CliError::Stream { .. } => 3,
            CliError::Sketch(e) | CliError::Harness(HarnessError::Sketch(e)) => sketch_code(e),
            CliError::Harness(HarnessError::Instance(_)) => 4,
            CliError::Harness(HarnessError::Io(_) | HarnessError::Csv(_) | HarnessError::Pool(_)) => 1,
        }
    }
}

fn sketch_code(e: &SketchError) -> u8 {
    match e {
        SketchError::InvalidParameter(_) | SketchError::Unsupported(_) | SketchError::LevelOutOfRange { .. } => 4,
        SketchError::RecoveryFailed(_) | SketchError::NoCollisionFreeRow(_) => 5,
        SketchError::Format(_) | SketchError::Incompatible(_) => 6,
        SketchError::IndexOutOfDomain { .. } => 3,
    }
}
