//! Command implementations behind the CLI: dataset preparation, single
//! training runs, evaluation, the model × lookback × horizon grid, parity
//! verification, and checkpoint inspection.

pub mod grid;
pub mod inspect;
pub mod prepare;
pub mod run;

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

pub use grid::{cell_seed, cmd_grid, ExperimentConfig, GridCell, GridResult};
pub use inspect::{cmd_inspect, cmd_verify, layer_table};
pub use prepare::{cmd_prepare, load_series, prepare_series, PrepareConfig, PrepareReport, Prepared, SourceSpec};
pub use run::{build_for, cmd_evaluate, cmd_train, ModelMode, TrainOptions, TrainOutcome, VALIDATION_FRACTION};

use crate::models::ModelError;
use crate::nn::NnError;
use crate::pipeline::PipelineError;
use crate::training::TrainError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRAIN_FILE: &str = "train.nwc";
pub const TEST_FILE: &str = "test.nwc";
pub const CHECKPOINT_FILE: &str = "model.nwm";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const PARITY: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<HarnessError>,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => exit::USAGE,
            HarnessError::Pipeline(PipelineError::InvalidConfig(_) | PipelineError::EmptyMonthSet) => exit::USAGE,
            HarnessError::Pipeline(_) | HarnessError::Io(_) => exit::DATA,
            HarnessError::Model(ModelError::UnexpectedMismatch { .. }) => exit::PARITY,
            HarnessError::Model(ModelError::UnknownArchitecture(_) | ModelError::NotParityMode) => exit::USAGE,
            HarnessError::Model(ModelError::Nn(_) | ModelError::InputTooShort { .. }) => exit::DATA,
            HarnessError::Train(TrainError::NonFiniteLoss { .. }) => exit::NUMERIC,
            HarnessError::Train(TrainError::InvalidConfig(_)) => exit::USAGE,
            HarnessError::Train(_) | HarnessError::Nn(_) => exit::DATA,
            HarnessError::Context { source, .. } => source.exit_code(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        HarnessError::Context { context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path.file_name().ok_or_else(|| HarnessError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut file = File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| HarnessError::Io(e).context(path.display().to_string()))
}
