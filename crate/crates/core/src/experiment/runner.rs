use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, Overrides};
use super::report::{rows_from_report, write_outputs, OutputPaths, ReportRow, Severity};
use crate::error::{Error, Result};
use crate::verify::{run_check, BoundReport};

/// Seed-determined content of a single-run JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct RunDocument {
    pub config: ExperimentConfig,
    pub report: BoundReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub theorem: String,
    pub runtime_ms: u64,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub severity: Severity,
    pub report: Option<BoundReport>,
    pub rows: Vec<ReportRow>,
    pub paths: Option<OutputPaths>,
    pub error: Option<String>,
}

impl RunOutcome {
    fn failed(err: &Error) -> Self {
        Self {
            severity: Severity::of_error(err),
            report: None,
            rows: Vec::new(),
            paths: None,
            error: Some(err.to_string()),
        }
    }
}

/// Validates and runs one experiment without writing files.
pub fn execute(cfg: &ExperimentConfig, overrides: &Overrides) -> Result<BoundReport> {
    cfg.validate()?;
    run_check(cfg.theorem, &cfg.to_check_config(overrides.parallelism)?)
}

/// `check --config`: load, apply overrides, run, write reports.
pub fn run_config_file(path: &Path, overrides: &Overrides) -> RunOutcome {
    let mut cfg = match ExperimentConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => return RunOutcome::failed(&e),
    };
    cfg.apply(overrides);
    run_config(&cfg, overrides)
}

pub fn run_config(cfg: &ExperimentConfig, overrides: &Overrides) -> RunOutcome {
    let report = match execute(cfg, overrides) {
        Ok(r) => r,
        Err(e) => return RunOutcome::failed(&e),
    };
    let severity = Severity::of_report(&report);
    let rows = rows_from_report(&report);
    let paths = OutputPaths::for_base(&cfg.output_base(overrides.out_dir.as_deref()));
    let meta = RunMeta {
        theorem: cfg.theorem.to_string(),
        runtime_ms: report.runtime_ms,
        exit_code: severity.code(),
    };
    let document = RunDocument {
        config: cfg.clone(),
        report,
    };
    if let Err(e) = write_outputs(&paths, &rows, &document, &meta) {
        return RunOutcome::failed(&e);
    }
    RunOutcome {
        severity,
        report: Some(document.report),
        rows,
        paths: Some(paths),
        error: None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub index: usize,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteMeta {
    pub entries: usize,
    pub runtime_ms: Vec<Option<u64>>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub severity: Severity,
    pub entries: Vec<SuiteEntry>,
    pub rows: Vec<ReportRow>,
    pub paths: Option<OutputPaths>,
    pub error: Option<String>,
}

/// Parses a suite file: a JSON array of experiment configs.
pub fn load_suite(path: &Path) -> Result<Vec<serde_json::Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    match value {
        serde_json::Value::Array(items) => Ok(items),
        _ => Err(Error::Config(format!("{}: a suite must be a JSON array", path.display()))),
    }
}

/// `suite --suite`: runs every entry in order and writes one aggregated
/// report named after the suite file. Per-entry `out` fields are ignored.
pub fn run_suite_file(path: &Path, overrides: &Overrides) -> SuiteOutcome {
    let items = match load_suite(path) {
        Ok(items) => items,
        Err(e) => {
            return SuiteOutcome {
                severity: Severity::Usage,
                entries: Vec::new(),
                rows: Vec::new(),
                paths: None,
                error: Some(e.to_string()),
            }
        }
    };
    let stem = path
        .file_stem()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("suite"));
    let base = overrides.out_dir.as_deref().unwrap_or(Path::new(".")).join(stem);
    run_suite(items, overrides, &base)
}

pub fn run_suite(items: Vec<serde_json::Value>, overrides: &Overrides, base: &Path) -> SuiteOutcome {
    if items.is_empty() {
        return SuiteOutcome {
            severity: Severity::Usage,
            entries: Vec::new(),
            rows: Vec::new(),
            paths: None,
            error: Some("suite is empty; nothing verified".into()),
        };
    }
    let mut severity = Severity::Satisfied;
    let mut entries = Vec::with_capacity(items.len());
    let mut rows = Vec::new();
    let mut runtimes = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let parsed = ExperimentConfig::from_value(item).map(|mut cfg| {
            cfg.apply(overrides);
            cfg
        });
        let (config, result) = match parsed {
            Ok(cfg) => {
                let result = execute(&cfg, overrides);
                (Some(cfg), result)
            }
            Err(e) => (None, Err(e)),
        };
        let entry = match result {
            Ok(report) => {
                let s = Severity::of_report(&report);
                severity = severity.max(s);
                runtimes.push(Some(report.runtime_ms));
                rows.extend(rows_from_report(&report));
                SuiteEntry {
                    index,
                    exit_code: s.code(),
                    config,
                    report: Some(report),
                    error: None,
                }
            }
            Err(e) => {
                let s = Severity::of_error(&e);
                severity = severity.max(s);
                runtimes.push(None);
                SuiteEntry {
                    index,
                    exit_code: s.code(),
                    config,
                    report: None,
                    error: Some(format!("entry {index}: {e}")),
                }
            }
        };
        entries.push(entry);
    }
    let paths = OutputPaths::for_base(base);
    let meta = SuiteMeta {
        entries: entries.len(),
        runtime_ms: runtimes,
        exit_code: severity.code(),
    };
    if let Err(e) = write_outputs(&paths, &rows, &entries, &meta) {
        return SuiteOutcome {
            severity: Severity::Usage,
            entries,
            rows,
            paths: None,
            error: Some(e.to_string()),
        };
    }
    SuiteOutcome {
        severity,
        entries,
        rows,
        paths: Some(paths),
        error: None,
    }
}
