use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::{BoundReport, Evidence, Role};

/// Claim name of the per-report summary row.
pub const OVERALL: &str = "overall";

/// CSV header, in column order.
pub const COLUMNS: [&str; 18] = [
    "theorem",
    "claim",
    "role",
    "shape",
    "ensemble",
    "connection",
    "q",
    "p",
    "trials",
    "seed",
    "p_hat",
    "ci_low",
    "ci_high",
    "rhs_primary",
    "rhs_printed_variant",
    "satisfied",
    "vacuous",
    "pass_rate_deterministic",
];

/// One CSV line. Each claim of a report gets a row, followed by an
/// `overall` row carrying the report verdict. Columns that do not apply to
/// a claim's kind are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub theorem: String,
    pub claim: String,
    /// `primary`, `informational` or `verdict`.
    pub role: String,
    /// Modes joined by `x`, e.g. `2x2`.
    pub shape: String,
    pub ensemble: String,
    pub connection: String,
    pub q: f64,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub p_hat: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub rhs_primary: Option<f64>,
    pub rhs_printed_variant: Option<f64>,
    pub satisfied: bool,
    pub vacuous: bool,
    pub pass_rate_deterministic: Option<f64>,
}

impl ReportRow {
    pub fn numeric_fields_finite(&self) -> bool {
        [self.q, self.p].iter().all(|v| v.is_finite())
            && [
                self.p_hat,
                self.ci_low,
                self.ci_high,
                self.rhs_primary,
                self.rhs_printed_variant,
                self.pass_rate_deterministic,
            ]
            .iter()
            .flatten()
            .all(|v| v.is_finite())
    }

    pub fn shape_modes(&self) -> Result<Vec<usize>> {
        self.shape
            .split('x')
            .map(|m| {
                m.parse()
                    .map_err(|_| Error::Config(format!("bad shape column {:?}", self.shape)))
            })
            .collect()
    }
}

pub fn rows_from_report(report: &BoundReport) -> Vec<ReportRow> {
    let params = &report.parameters;
    let shape = params
        .shape
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join("x");
    let base = |claim: &str, role: &str, satisfied: bool, vacuous: bool| ReportRow {
        theorem: report.theorem.as_str().to_string(),
        claim: claim.to_string(),
        role: role.to_string(),
        shape: shape.clone(),
        ensemble: params.ensemble.clone(),
        connection: params.connection.clone(),
        q: params.q,
        p: params.p,
        trials: params.trials,
        seed: params.seed,
        p_hat: None,
        ci_low: None,
        ci_high: None,
        rhs_primary: None,
        rhs_printed_variant: None,
        satisfied,
        vacuous,
        pass_rate_deterministic: None,
    };
    let mut rows: Vec<ReportRow> = report
        .claims
        .iter()
        .map(|claim| {
            let role = match claim.role {
                Role::Primary => "primary",
                Role::Informational => "informational",
            };
            let mut row = base(&claim.name, role, claim.satisfied(), claim.vacuous());
            match &claim.evidence {
                Evidence::Tail(t) => {
                    row.p_hat = Some(t.lhs.p_hat);
                    row.ci_low = Some(t.lhs.ci_low);
                    row.ci_high = Some(t.lhs.ci_high);
                    row.rhs_primary = Some(t.rhs.mean);
                    row.rhs_printed_variant = t.rhs_printed.as_ref().map(|r| r.mean);
                }
                Evidence::Deterministic(d) => row.pass_rate_deterministic = Some(d.pass_rate),
                Evidence::Chain(_) => {}
            }
            row
        })
        .collect();
    let mut overall = base(OVERALL, "verdict", report.satisfied, report.vacuous);
    overall.pass_rate_deterministic = report.deterministic_pass_rate();
    rows.push(overall);
    rows
}

pub fn write_rows<W: Write>(writer: W, rows: &[ReportRow]) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    csv.write_record(COLUMNS).map_err(csv_error)?;
    for row in rows {
        csv.serialize(row).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut csv = csv::Reader::from_reader(reader);
    let header: Vec<String> = csv.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if header != COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    csv.deserialize().map(|r| r.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Paths of the three files written for one report base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub meta: PathBuf,
}

impl OutputPaths {
    pub fn for_base(base: &Path) -> Self {
        let with = |suffix: &str| {
            let mut name = base.as_os_str().to_owned();
            name.push(suffix);
            PathBuf::from(name)
        };
        Self {
            csv: with(".csv"),
            json: with(".json"),
            meta: with(".meta.json"),
        }
    }
}

/// Writes the CSV, the JSON mirror and the metadata file. The JSON mirror
/// holds only seed-determined content; timings go to the metadata file.
pub fn write_outputs<D: Serialize, M: Serialize>(
    paths: &OutputPaths,
    rows: &[ReportRow],
    document: &D,
    meta: &M,
) -> Result<()> {
    if let Some(dir) = paths.csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_rows(std::fs::File::create(&paths.csv)?, rows)?;
    write_json(&paths.json, document)?;
    write_json(&paths.meta, meta)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Process exit status. Ordered so that a suite reports the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Satisfied = 0,
    Violated = 1,
    Usage = 2,
}

impl Severity {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_report(report: &BoundReport) -> Self {
        if report.satisfied {
            Severity::Satisfied
        } else {
            Severity::Violated
        }
    }

    /// Configuration, shape and I/O problems are usage errors; numerical
    /// failures during sampling count as failed verification.
    pub fn of_error(err: &Error) -> Self {
        match err {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidShape(_)
            | Error::ShapeMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::Io(_) => Severity::Usage,
            Error::DimensionMismatch { .. }
            | Error::NonFinite { .. }
            | Error::Singular { .. }
            | Error::NotHermitian { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NoConvergence { .. }
            | Error::Domain { .. } => Severity::Violated,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::Ensemble;
    use crate::tensor::Shape;
    use crate::verify::{run_check, CheckConfig, TheoremId};

    fn report() -> BoundReport {
        let cfg = CheckConfig::new(Shape::new(vec![2, 2]).unwrap(), Ensemble::Wishart)
            .with_trials(40)
            .with_q(1.5);
        run_check(TheoremId::TcBounds, &cfg.with_connection(crate::connections::ConnectionSpec::named("square")))
            .unwrap()
    }

    #[test]
    fn rows_cover_every_claim_plus_overall() {
        let r = report();
        let rows = rows_from_report(&r);
        assert_eq!(rows.len(), r.claims.len() + 1);
        let last = rows.last().unwrap();
        assert_eq!(last.claim, OVERALL);
        assert_eq!(last.satisfied, r.satisfied);
        assert_eq!(last.shape_modes().unwrap(), vec![2, 2]);
        assert!(rows.iter().all(ReportRow::numeric_fields_finite));
        assert!(rows.iter().any(|row| row.p_hat.is_some()));
        assert!(rows.iter().any(|row| row.pass_rate_deterministic.is_some()));
    }

    #[test]
    fn csv_round_trip_with_fixed_header() {
        let rows = rows_from_report(&report());
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn wrong_header_rejected() {
        let text = "theorem,claim\nmarkov,x\n";
        assert!(read_rows(text.as_bytes()).is_err());
    }

    #[test]
    fn severity_ordering_and_mapping() {
        assert!(Severity::Usage > Severity::Violated && Severity::Violated > Severity::Satisfied);
        assert_eq!(Severity::of_error(&Error::Config("x".into())), Severity::Usage);
        assert_eq!(
            Severity::of_error(&Error::NotPositiveDefinite { lambda_min: -1.0, lambda_max: 1.0 }),
            Severity::Violated
        );
        assert_eq!(Severity::Usage.code(), 2);
    }

    #[test]
    fn output_paths_append_suffixes() {
        let p = OutputPaths::for_base(Path::new("out/run.v1"));
        assert_eq!(p.csv, PathBuf::from("out/run.v1.csv"));
        assert_eq!(p.meta, PathBuf::from("out/run.v1.meta.json"));
    }
}
