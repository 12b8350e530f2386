//! Scenario runner: parses a TOML scenario, runs the requested engines and
//! writes one CSV per engine plus `summary.json` and `manifest.json`.

pub mod compare;
pub mod run;
pub mod scenario;

use std::path::PathBuf;

pub use compare::{compare, CompareOptions, CompareReport};
pub use run::{run, RunManifest};
pub use scenario::{Engine, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("bad override `{0}`")]
    Override(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("engine {engine}: {source}")]
    Engine {
        engine: Engine,
        #[source]
        source: crate::Error,
    },
    #[error("column `{column}` missing from {path}")]
    ColumnMissing { column: String, path: PathBuf },
    #[error("time axes differ: {0}")]
    TimeAxisMismatch(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
