//! File formats, the batch pipeline and the command-line tool built on
//! `arealrisk-core`.

pub mod config;
pub mod error;
pub mod fixture;
pub mod formats;
pub mod parallel;
pub mod pipeline;
pub mod report;

pub use config::PipelineConfig;
pub use error::{Error, Result, Stage};
pub use parallel::Threads;
pub use pipeline::{run_pipeline, RunSummary};
