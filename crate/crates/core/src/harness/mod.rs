//! Config-driven experiments, run records and reports.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod fit;
pub mod record;
pub mod report;
pub mod svg;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind, ExperimentParams};
pub use experiments::run_experiment;
pub use record::{Budget, RunRecord, RunWriter};
pub use report::{emit_report, ReportEntry};
