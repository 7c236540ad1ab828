//! Experiment plumbing shared by the command-line runner: JSON configs,
//! CSV and JSON reports, exit severities and brute-force oracles.

pub mod config;
pub mod oracle;
pub mod report;
pub mod runner;

pub use config::{required_fields, ExperimentConfig, Overrides, TargetSpec};
pub use oracle::{run_oracle, OracleArgs, OracleKind, OracleOutcome};
pub use report::{read_rows, rows_from_report, write_rows, OutputPaths, ReportRow, Severity, COLUMNS};
pub use runner::{execute, run_config, run_config_file, run_suite, run_suite_file, RunOutcome, SuiteOutcome};
