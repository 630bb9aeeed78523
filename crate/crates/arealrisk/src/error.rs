use std::fmt;
use std::path::{Path, PathBuf};

/// Pipeline stage names, used to tag errors from `run_pipeline`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Score,
    Aggregate,
    Graph,
    Moran,
    Smooth,
    Exposure,
    Join,
    Regress,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Score => "score",
            Stage::Aggregate => "aggregate",
            Stage::Graph => "graph",
            Stage::Moran => "moran",
            Stage::Smooth => "smooth",
            Stage::Exposure => "exposure",
            Stage::Join => "join",
            Stage::Regress => "regress",
            Stage::Report => "report",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    /// Inputs that are individually valid but do not fit together.
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] arealrisk_core::Error),
    #[error("{stage} stage: {source}")]
    Stage { stage: Stage, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, message: impl fmt::Display) -> Self {
        Error::Format { path: path.to_path_buf(), message: message.to_string() }
    }

    /// Stage that produced the error, if tagged.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T, E: Into<Error>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e.into()) })
    }
}
