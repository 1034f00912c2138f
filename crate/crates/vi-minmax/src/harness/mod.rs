//! The experiment harness: config parsing, seeded parallel sweeps with
//! CSV/JSON outputs, run comparison, and the invariant verification
//! suite. The CLI in `main.rs` is a thin wrapper over this module.

pub mod compare;
pub mod config;
pub mod csv;
pub mod runner;
pub mod verify;

pub use compare::{compare_runs, render_comparison, Comparison, CompareRow};
pub use config::{parse_config, serialize_config, ConfigError, ExperimentConfig, ProblemSpec};
pub use csv::{parse_trace_csv, trace_to_csv, write_trace_csv, CsvError, CSV_HEADER};
pub use runner::{
    default_jobs, load_summary, parallel_map, run_experiment, write_summary, Aggregate,
    BoundReport, HarnessError, MeanStd, RunSummary, SeedSummary, SUMMARY_FILE,
};
pub use verify::{verify_suite, CheckOutcome, VerifyLevel, VerifyReport};
