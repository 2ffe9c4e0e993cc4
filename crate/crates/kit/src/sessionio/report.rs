//! Machine-readable session and cohort reports (JSON).

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use shoulder_core::params::SessionParameters;
use shoulder_core::session::{Group, Side, Timepoint};
use shoulder_core::stats::cohort::{subject_order, Cohort, CohortTables};
use shoulder_core::stats::{cohort_tables, ParameterRecord, StatsError};
use shoulder_core::AnalysisConfig;

use super::{config_hash, read_text, sha256_hex, write_atomic, IoError};

pub const REPORT_SCHEMA: u32 = 1;

/// Output of `analyze`: one session's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionReport {
    pub schema_version: u32,
    pub subject: String,
    pub group: Group,
    pub timepoint: Timepoint,
    pub side: Side,
    /// Session directory as given on the command line.
    pub session: String,
    pub config_hash: String,
    pub parameters: SessionParameters,
}

impl SessionReport {
    pub fn record(&self) -> ParameterRecord {
        self.parameters.record(&self.subject, self.group, self.timepoint)
    }
}

/// Where a cohort row came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRef {
    pub subject: String,
    pub cohort: Option<Cohort>,
    pub source: String,
    /// SHA-256 of the source file.
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub sessions: Vec<SessionRef>,
    pub records: Vec<ParameterRecord>,
    pub tables: CohortTables,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    write_atomic(path, to_json(value).as_bytes())
}

fn from_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

fn check_schema(path: &Path, v: u32) -> Result<(), IoError> {
    if v != REPORT_SCHEMA {
        return Err(IoError::Validation {
            path: path.display().to_string(),
            line: None,
            invariant: format!("unsupported report schema_version {v} (expected {REPORT_SCHEMA})"),
        });
    }
    Ok(())
}

pub fn parse_session_report(text: &str, path: &Path) -> Result<SessionReport, IoError> {
    let r: SessionReport = from_json(text, path)?;
    check_schema(path, r.schema_version)?;
    Ok(r)
}

pub fn parse_cohort_report(text: &str, path: &Path) -> Result<CohortReport, IoError> {
    let r: CohortReport = from_json(text, path)?;
    check_schema(path, r.schema_version)?;
    Ok(r)
}

pub fn read_cohort_report(path: &Path) -> Result<CohortReport, IoError> {
    parse_cohort_report(&read_text(path)?, path)
}

fn stats_error(e: StatsError) -> IoError {
    match e {
        StatsError::EmptyGroup(g) => IoError::EmptyGroup(g),
        other => IoError::Validation { path: "cohort".into(), line: None, invariant: other.to_string() },
    }
}

/// Builds a cohort from parameter records and their provenance, ordered by
/// subject id and cohort.
pub fn build_cohort(
    mut entries: Vec<(SessionRef, ParameterRecord)>,
    required: &[Cohort],
    cfg: &AnalysisConfig,
    notes: Vec<String>,
) -> Result<CohortReport, IoError> {
    entries.sort_by(|a, b| {
        subject_order(&a.0.subject, &b.0.subject)
            .then(a.0.cohort.cmp(&b.0.cohort))
            .then(a.0.source.cmp(&b.0.source))
    });
    for w in entries.windows(2) {
        let (a, b) = (&w[0].0, &w[1].0);
        if a.subject == b.subject && a.cohort == b.cohort && a.cohort.is_some() {
            return Err(IoError::Validation {
                path: b.source.clone(),
                line: None,
                invariant: format!("subject {} appears twice in {} (also {})", b.subject, label(b.cohort), a.source),
            });
        }
    }
    let records: Vec<ParameterRecord> = entries.iter().map(|e| e.1.clone()).collect();
    let tables = cohort_tables(&records, required, &cfg.sd_policy).map_err(stats_error)?;
    Ok(CohortReport {
        schema_version: REPORT_SCHEMA,
        config_hash: config_hash(cfg),
        sessions: entries.into_iter().map(|e| e.0).collect(),
        records,
        tables,
        notes,
    })
}

fn label(c: Option<Cohort>) -> &'static str {
    c.map_or("no cohort", Cohort::label)
}

/// Reads session reports from `paths` and builds the cohort.
pub fn cohort_from_reports(
    paths: &[std::path::PathBuf],
    required: &[Cohort],
    cfg: &AnalysisConfig,
) -> Result<CohortReport, IoError> {
    let mut entries = Vec::with_capacity(paths.len());
    for p in paths {
        let text = read_text(p)?;
        let report = parse_session_report(&text, p)?;
        let record = report.record();
        let r = SessionRef {
            subject: report.subject.clone(),
            cohort: record.cohort(),
            source: p.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        };
        entries.push((r, record));
    }
    build_cohort(entries, required, cfg, Vec::new())
}
