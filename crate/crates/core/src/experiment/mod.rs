//! Batch front-end: experiment configs, task runs with reports, and reproduction of catalog facts.

mod config;
mod reproduce;
mod run;

pub use config::{ChildSpec, ExperimentConfig, LawSpec, ModelSpec, OutcomeSpec, Prob, RateSpec, Settings, Task};
pub use reproduce::{
    evaluate_fact, fact_passes, reproduce_all, reproduce_example, write_table, Computed, FactRow, ReproduceOptions, Reproduction,
};
pub use run::{
    exit_code, run_experiment, Manifest, Report, RunOutcome, TaskRecord, TaskStatus, EXIT_MODEL_REJECTED, EXIT_OK, EXIT_TASK_FAILED,
    REPORT_SCHEMA, REPORT_SCHEMA_VERSION,
};
