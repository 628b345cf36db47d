//! Config-driven experiment runs.

mod config;
mod run;

pub use config::{
    adversarial_threshold, validate, DenseRow, ExperimentConfig, GapSpec, GridMode, GridPoint, GridSpec,
    InstanceSpec, MappingSpec, NamedGap, OutcomeSpec, Setup, ValidationReport,
};
pub use run::{
    child_seed, run_grid, run_replicated, simulate, write_aggregate_json, write_outputs, write_results_csv,
    write_trace_jsonl, GridOutput, GridSlopes, PointSummary, RunOptions, RunResult, Simulation,
};
