//! Experiment orchestration: run configurations, the pipeline that executes
//! seed sweeps of the discovery → fit → optimize loop and its baselines, and
//! deterministic CSV output.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{parse_config, ConfigError, ExperimentKind, Method, RunConfig};
pub use pipeline::{run_pipeline, RunOutcome};
pub use report::{write_outputs, ResultRow, Value};
