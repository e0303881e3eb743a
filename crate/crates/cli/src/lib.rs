//! Batch pipeline and subcommand implementations behind the `forge` binary.

pub mod config;
pub mod pipeline;
pub mod stages;

pub use config::{RunConfig, WSetting};
pub use pipeline::{run_pipeline, StageError};
