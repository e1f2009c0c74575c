//! Reproducible Monte-Carlo experiments that check the concentration bounds,
//! and the files they leave behind.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, PRESETS};
pub use experiments::{run, run_with_workers};
pub use report::{emit_report, read_results, ExperimentReport, Row};
