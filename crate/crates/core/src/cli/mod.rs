//! Command-line orchestration: configuration and the pipeline subcommands.

mod config;
mod pipeline;

pub use config::{Inputs, MeasuresConfig, PipelineConfig, RichClubConfig, Window};
pub use pipeline::{files, run, run_with_threads, Stage};
