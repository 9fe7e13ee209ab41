//! Experiment presets, reports and the `stochconv` command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod pipeline;
pub mod plots;
pub mod report;

pub use config::{ExperimentConfig, Preset};
pub use error::{CliError, CliResult};
pub use pipeline::{run_and_persist, run_experiment, run_stages, Stage};
pub use plots::{emit_plot_data, PlotBundle};
pub use report::{ExperimentReport, Verdict};
