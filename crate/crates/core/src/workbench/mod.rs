//! Run configuration, pipelines and output files behind the `qedft` binary.

mod commands;
mod config;
mod metrics;
mod output;

pub use commands::*;
pub use config::*;
pub use metrics::*;
pub use output::*;
