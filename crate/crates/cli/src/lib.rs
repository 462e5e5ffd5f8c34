//! File formats, pipeline orchestration, and the `toolkit` CLI on top of
//! the pure algorithms in `conreach-core`.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod json;
pub mod stages;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
