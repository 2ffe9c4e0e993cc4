//! The published reference cohort, shipped as a checked-in fixture.

use std::path::Path;

use serde::Deserialize;
use shoulder_core::stats::cohort::{Cohort, Comparison, Parameter};
use shoulder_core::stats::{ParameterRecord, SdConvention};
use shoulder_core::AnalysisConfig;

use crate::sessionio::report::{build_cohort, CohortReport, SessionRef};
use crate::sessionio::{sha256_hex, IoError};

pub const REFERENCE_COHORT: &str = include_str!("../fixtures/reference_cohort.toml");
pub const REFERENCE_NAME: &str = "reference_cohort.toml";

/// A printed `mean ± sd` pair.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrintedSummary {
    /// Table id, or `text` for values quoted in prose.
    pub table: String,
    pub parameter: Parameter,
    pub cohort: Cohort,
    pub convention: SdConvention,
    pub mean: f64,
    pub sd: f64,
    /// Present when the printed value does not follow from the data.
    pub recomputed_mean: Option<f64>,
    pub recomputed_sd: Option<f64>,
    pub note: Option<String>,
}

impl PrintedSummary {
    pub fn is_consistent(&self) -> bool {
        self.recomputed_mean.is_none() && self.recomputed_sd.is_none()
    }

    /// The value a recomputation should land on.
    pub fn expected(&self) -> (f64, f64) {
        (self.recomputed_mean.unwrap_or(self.mean), self.recomputed_sd.unwrap_or(self.sd))
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryOnly {
    pub parameter: Parameter,
    pub cohort: Cohort,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportedTest {
    pub parameter: Parameter,
    pub comparison: Comparison,
    pub p: f64,
    pub reproduced: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCohort {
    pub schema_version: u32,
    pub description: String,
    #[serde(rename = "record")]
    pub records: Vec<ParameterRecord>,
    #[serde(default)]
    pub printed: Vec<PrintedSummary>,
    #[serde(default)]
    pub summary_only: Vec<SummaryOnly>,
    #[serde(default, rename = "reported_test")]
    pub reported_tests: Vec<ReportedTest>,
}

impl ReferenceCohort {
    pub fn parse(text: &str, path: &Path) -> Result<Self, IoError> {
        let r: ReferenceCohort = toml::from_str(text).map_err(|e| IoError::Parse {
            path: path.display().to_string(),
            line: e.span().map_or(1, |s| text[..s.start].matches('\n').count() as u64 + 1),
            message: e.message().to_string(),
        })?;
        if r.schema_version != shoulder_core::session::SCHEMA_VERSION {
            return Err(IoError::Validation {
                path: path.display().to_string(),
                line: None,
                invariant: format!("unsupported schema_version {}", r.schema_version),
            });
        }
        Ok(r)
    }

    /// The embedded copy.
    pub fn embedded() -> Self {
        Self::parse(REFERENCE_COHORT, Path::new(REFERENCE_NAME)).expect("embedded fixture parses")
    }

    pub fn values(&self, parameter: Parameter, cohort: Cohort) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.cohort() == Some(cohort))
            .filter_map(|r| r.get(parameter))
            .collect()
    }

    pub fn printed(&self, table: &str, parameter: Parameter, cohort: Cohort) -> Option<&PrintedSummary> {
        self.printed.iter().find(|p| p.table == table && p.parameter == parameter && p.cohort == cohort)
    }

    /// Published group mean of a parameter: from the tables when printed
    /// there, otherwise from the summary-only values.
    pub fn group_mean(&self, parameter: Parameter, cohort: Cohort) -> Option<f64> {
        let from_table = self
            .printed
            .iter()
            .find(|p| p.table != "text" && p.parameter == parameter && p.cohort == cohort)
            .map(|p| p.mean);
        from_table.or_else(|| {
            self.summary_only.iter().find(|s| s.parameter == parameter && s.cohort == cohort).map(|s| s.mean)
        })
    }

    pub fn notes(&self) -> Vec<String> {
        let mut notes: Vec<String> = self.printed.iter().filter_map(|p| p.note.clone()).collect();
        for t in &self.reported_tests {
            let status = if t.reproduced { "reproduced" } else { "not reproduced" };
            notes.push(format!(
                "reported p = {} for {} {}: {status}; {}",
                t.p,
                t.parameter.label(),
                t.comparison.label(),
                t.note
            ));
        }
        notes
    }

    /// Cohort report over the fixture, one provenance entry per record.
    pub fn report(&self, source: &str, text: &str, cfg: &AnalysisConfig) -> Result<CohortReport, IoError> {
        let sha = sha256_hex(text.as_bytes());
        let entries = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let reference = SessionRef {
                    subject: r.subject.clone(),
                    cohort: r.cohort(),
                    source: format!("{source}#record{}", i + 1),
                    sha256: sha.clone(),
                };
                (reference, r.clone())
            })
            .collect();
        build_cohort(entries, &[Cohort::AcT0, Cohort::AcT1, Cohort::Hc], cfg, self.notes())
    }
}

pub fn read_reference(path: &Path, cfg: &AnalysisConfig) -> Result<CohortReport, IoError> {
    let text = crate::sessionio::read_text(path)?;
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    ReferenceCohort::parse(&text, path)?.report(&name, &text, cfg)
}
