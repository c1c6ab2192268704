//! Declarative social-psychology experiments run on cogtown agents: five
//! paradigms with base and extended variants, ablation arms, repetitions,
//! result tables and significance tests.

pub mod experiments;
pub mod output;
pub mod protocol;
pub mod references;
pub mod results;
pub mod runner;
pub mod stats;
pub mod subject;
pub mod templates;

use cogtown_core::backend::BackendError;
use thiserror::Error;

pub use protocol::{ExperimentKind, ExperimentProtocol, Variant};
pub use results::{ResultRow, ResultTable, Unit};
pub use runner::{run_experiment, ExperimentRun};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid result table: {0}")]
    Table(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
