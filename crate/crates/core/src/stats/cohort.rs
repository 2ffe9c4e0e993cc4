//! Cohort-level tables and the comparison battery.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{mann_whitney_u, mean_sd, wilcoxon_signed_rank, SdConvention, Sidedness, StatsError, TestResult};
use crate::session::{Group, Timepoint};

/// A group/timepoint cell of the study design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Cohort {
    #[cfg_attr(feature = "serde", serde(rename = "AC-T0"))]
    AcT0,
    #[cfg_attr(feature = "serde", serde(rename = "AC-T1"))]
    AcT1,
    #[cfg_attr(feature = "serde", serde(rename = "HC"))]
    Hc,
}

impl Cohort {
    pub fn of(group: Group, timepoint: Timepoint) -> Option<Self> {
        match (group, timepoint) {
            (Group::Ac, Timepoint::T0) => Some(Cohort::AcT0),
            (Group::Ac, Timepoint::T1) => Some(Cohort::AcT1),
            (Group::Hc, _) => Some(Cohort::Hc),
            (Group::Ac, Timepoint::None) => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Cohort::AcT0 => "AC-T0",
            Cohort::AcT1 => "AC-T1",
            Cohort::Hc => "HC",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Parameter {
    RomE,
    RomA,
    RomS,
    ActTimeScapula,
    ActTimeHumerus,
    OnsetLeadScapula,
    ShrRatio,
}

impl Parameter {
    pub const ALL: [Parameter; 7] = [
        Parameter::RomE,
        Parameter::RomA,
        Parameter::RomS,
        Parameter::ActTimeScapula,
        Parameter::ActTimeHumerus,
        Parameter::OnsetLeadScapula,
        Parameter::ShrRatio,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Parameter::RomE => "ROME (°)",
            Parameter::RomA => "ROMa (°)",
            Parameter::RomS => "ROMs (°)",
            Parameter::ActTimeScapula => "Activ. time scapula (s)",
            Parameter::ActTimeHumerus => "Activ. time humerus (s)",
            Parameter::OnsetLeadScapula => "Scapula onset lead (s)",
            Parameter::ShrRatio => "ROMa/ROMs",
        }
    }

    /// Decimal places used when tabulating.
    pub fn decimals(self) -> usize {
        match self {
            Parameter::RomE | Parameter::RomA | Parameter::RomS => 1,
            _ => 2,
        }
    }
}

/// The scalar outcome of one session, the unit a cohort is built from.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ParameterRecord {
    pub subject: String,
    pub group: Group,
    #[cfg_attr(feature = "serde", serde(default))]
    pub timepoint: Timepoint,
    #[cfg_attr(feature = "serde", serde(default))]
    pub rom_e: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub rom_a: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub rom_s: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub act_time_scapula: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub act_time_humerus: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub onset_lead_scapula: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub shr_ratio: Option<f64>,
}

impl ParameterRecord {
    pub fn get(&self, p: Parameter) -> Option<f64> {
        match p {
            Parameter::RomE => self.rom_e,
            Parameter::RomA => self.rom_a,
            Parameter::RomS => self.rom_s,
            Parameter::ActTimeScapula => self.act_time_scapula,
            Parameter::ActTimeHumerus => self.act_time_humerus,
            Parameter::OnsetLeadScapula => self.onset_lead_scapula,
            Parameter::ShrRatio => self.shr_ratio,
        }
    }

    pub fn cohort(&self) -> Option<Cohort> {
        Cohort::of(self.group, self.timepoint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Column {
    pub parameter: Parameter,
    pub cohort: Cohort,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableRow {
    pub subject: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Footer {
    pub n: usize,
    pub mean: f64,
    /// Absent for a single value.
    pub sd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Table {
    pub id: String,
    pub caption: String,
    pub row_label: String,
    pub sd_convention: SdConvention,
    pub columns: Vec<Column>,
    pub rows: Vec<TableRow>,
    pub footer: Vec<Option<Footer>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Comparison {
    /// Mann-Whitney, AC at baseline against healthy controls.
    T0VsHc,
    /// Mann-Whitney, AC after treatment against healthy controls.
    T1VsHc,
    /// Wilcoxon, AC baseline against post-treatment, paired by subject.
    T0VsT1,
}

impl Comparison {
    pub fn label(self) -> &'static str {
        match self {
            Comparison::T0VsHc => "AC-T0 vs HC",
            Comparison::T1VsHc => "AC-T1 vs HC",
            Comparison::T0VsT1 => "AC-T0 vs AC-T1",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TestOutcome {
    Done { two_sided: TestResult, one_sided: TestResult },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatteryEntry {
    pub parameter: Parameter,
    pub comparison: Comparison,
    /// Subject ids contributing to the comparison.
    pub subjects: Vec<String>,
    pub outcome: TestOutcome,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CohortTables {
    pub tables: Vec<Table>,
    pub tests: Vec<BatteryEntry>,
}

impl CohortTables {
    pub fn table(&self, id: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.id == id)
    }

    pub fn test(&self, parameter: Parameter, comparison: Comparison) -> Option<&BatteryEntry> {
        self.tests
            .iter()
            .find(|e| e.parameter == parameter && e.comparison == comparison)
    }
}

/// Layout of one output table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableSpec {
    pub id: &'static str,
    pub caption: &'static str,
    pub row_label: &'static str,
    pub columns: Vec<Column>,
}

fn col(parameter: Parameter, cohort: Cohort) -> Column {
    Column { parameter, cohort }
}

/// The four standard tables plus a rhythm summary.
pub fn standard_tables() -> Vec<TableSpec> {
    use Cohort::*;
    use Parameter::*;
    alloc::vec![
        TableSpec {
            id: "I",
            caption: "Range of motion in elevation and abduction, AC at baseline and post-treatment",
            row_label: "Patient",
            columns: alloc::vec![col(RomE, AcT0), col(RomE, AcT1), col(RomA, AcT0), col(RomA, AcT1)],
        },
        TableSpec {
            id: "II",
            caption: "Range of motion in elevation and abduction, HC",
            row_label: "Subject",
            columns: alloc::vec![col(RomE, Hc), col(RomA, Hc)],
        },
        TableSpec {
            id: "III",
            caption: "Range of motion of scapula in abduction, AC at baseline and post-treatment",
            row_label: "Patient",
            columns: alloc::vec![col(RomS, AcT0), col(RomS, AcT1)],
        },
        TableSpec {
            id: "IV",
            caption: "Activation times of the scapula and humerus during abduction",
            row_label: "Patient",
            columns: alloc::vec![
                col(ActTimeScapula, AcT0),
                col(ActTimeScapula, AcT1),
                col(ActTimeHumerus, AcT0),
                col(ActTimeHumerus, AcT1),
            ],
        },
        TableSpec {
            id: "V",
            caption: "Scapulohumeral rhythm: scapula onset lead and ROMa/ROMs ratio",
            row_label: "Subject",
            columns: alloc::vec![
                col(OnsetLeadScapula, AcT0),
                col(OnsetLeadScapula, AcT1),
                col(OnsetLeadScapula, Hc),
                col(ShrRatio, AcT0),
                col(ShrRatio, AcT1),
                col(ShrRatio, Hc),
            ],
        },
    ]
}

/// Orders subject ids numerically when both parse as integers.
pub fn subject_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Per-table SD convention, looked up by table id; tables not listed use
/// the sample convention.
pub type SdPolicy = BTreeMap<String, SdConvention>;

pub fn default_sd_policy() -> SdPolicy {
    [
        ("I", SdConvention::Population),
        ("II", SdConvention::Sample),
        ("III", SdConvention::Sample),
        ("IV", SdConvention::Sample),
        ("V", SdConvention::Sample),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn footer(values: &[f64], convention: SdConvention) -> Option<Footer> {
    match values.len() {
        0 => None,
        1 => Some(Footer { n: 1, mean: values[0], sd: None }),
        n => mean_sd(values, convention).ok().map(|(mean, sd)| Footer { n, mean, sd: Some(sd) }),
    }
}

fn build_table(spec: &TableSpec, records: &[&ParameterRecord], convention: SdConvention) -> Option<Table> {
    let cohorts: Vec<Cohort> = spec.columns.iter().map(|c| c.cohort).collect();
    let mut subjects: Vec<&str> = records
        .iter()
        .filter(|r| r.cohort().is_some_and(|c| cohorts.contains(&c)))
        .map(|r| r.subject.as_str())
        .collect();
    subjects.sort_by(|a, b| subject_order(a, b));
    subjects.dedup();

    let lookup = |subject: &str, column: &Column| {
        records
            .iter()
            .find(|r| r.subject == subject && r.cohort() == Some(column.cohort))
            .and_then(|r| r.get(column.parameter))
    };
    let rows: Vec<TableRow> = subjects
        .iter()
        .map(|s| TableRow {
            subject: s.to_string(),
            values: spec.columns.iter().map(|c| lookup(s, c)).collect(),
        })
        .filter(|row| row.values.iter().any(Option::is_some))
        .collect();
    if rows.is_empty() {
        return None;
    }
    let footer = (0..spec.columns.len())
        .map(|k| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.values[k]).collect();
            self::footer(&vals, convention)
        })
        .collect();
    Some(Table {
        id: spec.id.to_string(),
        caption: spec.caption.to_string(),
        row_label: spec.row_label.to_string(),
        sd_convention: convention,
        columns: spec.columns.clone(),
        rows,
        footer,
    })
}

fn both_sides(
    run: impl Fn(Sidedness) -> Result<TestResult, StatsError>,
) -> TestOutcome {
    match (run(Sidedness::Two), run(Sidedness::One)) {
        (Ok(two_sided), Ok(one_sided)) => TestOutcome::Done { two_sided, one_sided },
        (Err(e), _) | (_, Err(e)) => TestOutcome::Skipped { reason: e.to_string() },
    }
}

fn battery(records: &[&ParameterRecord]) -> Vec<BatteryEntry> {
    let values = |p: Parameter, c: Cohort| -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = records
            .iter()
            .filter(|r| r.cohort() == Some(c))
            .filter_map(|r| r.get(p).map(|x| (r.subject.clone(), x)))
            .collect();
        v.sort_by(|a, b| subject_order(&a.0, &b.0));
        v
    };
    let mut out = Vec::new();
    for p in Parameter::ALL {
        let t0 = values(p, Cohort::AcT0);
        let t1 = values(p, Cohort::AcT1);
        let hc = values(p, Cohort::Hc);
        for (comparison, ac) in [(Comparison::T0VsHc, &t0), (Comparison::T1VsHc, &t1)] {
            if ac.is_empty() && hc.is_empty() {
                continue;
            }
            let x: Vec<f64> = ac.iter().map(|v| v.1).collect();
            let y: Vec<f64> = hc.iter().map(|v| v.1).collect();
            out.push(BatteryEntry {
                parameter: p,
                comparison,
                subjects: ac.iter().chain(hc.iter()).map(|v| v.0.clone()).collect(),
                outcome: both_sides(|s| mann_whitney_u(&x, &y, s)),
            });
        }
        let pairs: Vec<(String, f64, f64)> = t0
            .iter()
            .filter_map(|(s, a)| t1.iter().find(|(u, _)| u == s).map(|(_, b)| (s.clone(), *a, *b)))
            .collect();
        if t0.is_empty() && t1.is_empty() {
            continue;
        }
        let before: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let after: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        out.push(BatteryEntry {
            parameter: p,
            comparison: Comparison::T0VsT1,
            subjects: pairs.iter().map(|p| p.0.clone()).collect(),
            outcome: if pairs.is_empty() {
                TestOutcome::Skipped { reason: "no subject measured at both timepoints".to_string() }
            } else {
                both_sides(|s| wilcoxon_signed_rank(&before, &after, s))
            },
        });
    }
    out
}

/// Builds the cohort tables and the comparison battery.
///
/// Every cohort in `required` must contain at least one record.
pub fn cohort_tables(
    records: &[ParameterRecord],
    required: &[Cohort],
    sd_policy: &SdPolicy,
) -> Result<CohortTables, StatsError> {
    let usable: Vec<&ParameterRecord> = records.iter().filter(|r| r.cohort().is_some()).collect();
    if usable.is_empty() {
        return Err(StatsError::EmptyGroup("any".to_string()));
    }
    for c in required {
        if !usable.iter().any(|r| r.cohort() == Some(*c)) {
            return Err(StatsError::EmptyGroup(c.label().to_string()));
        }
    }
    let tables = standard_tables()
        .iter()
        .filter_map(|spec| {
            let convention = sd_policy.get(spec.id).copied().unwrap_or(SdConvention::Sample);
            build_table(spec, &usable, convention)
        })
        .collect();
    Ok(CohortTables { tables, tests: battery(&usable) })
}

/// `mean ± sd` with `decimals` places, or the mean alone when `sd` is absent.
pub fn format_mean_sd(f: &Footer, decimals: usize) -> String {
    match f.sd {
        Some(sd) => format!("{:.*} ± {:.*}", decimals, f.mean, decimals, sd),
        None => format!("{:.*}", decimals, f.mean),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(subject: &str, group: Group, timepoint: Timepoint, rom_s: f64) -> ParameterRecord {
        ParameterRecord {
            subject: subject.to_string(),
            group,
            timepoint,
            rom_s: Some(rom_s),
            ..Default::default()
        }
    }

    #[test]
    fn single_subject_has_no_sd() {
        let r = vec![rec("1", Group::Ac, Timepoint::T0, 20.0)];
        let t = cohort_tables(&r, &[Cohort::AcT0], &default_sd_policy()).unwrap();
        let f = t.table("III").unwrap().footer[0].unwrap();
        assert_eq!(f.n, 1);
        assert_eq!(f.sd, None);
        assert_eq!(format_mean_sd(&f, 1), "20.0");
    }

    #[test]
    fn missing_required_group() {
        let r = vec![rec("1", Group::Ac, Timepoint::T0, 20.0)];
        assert_eq!(
            cohort_tables(&r, &[Cohort::Hc], &default_sd_policy()),
            Err(StatsError::EmptyGroup("HC".to_string()))
        );
        assert!(matches!(cohort_tables(&[], &[], &default_sd_policy()), Err(StatsError::EmptyGroup(_))));
    }

    #[test]
    fn paired_battery_matches_subjects() {
        let r = vec![
            rec("2", Group::Ac, Timepoint::T0, 10.0),
            rec("10", Group::Ac, Timepoint::T0, 11.0),
            rec("2", Group::Ac, Timepoint::T1, 15.0),
            rec("10", Group::Ac, Timepoint::T1, 19.0),
            rec("3", Group::Ac, Timepoint::T1, 40.0),
        ];
        let t = cohort_tables(&r, &[], &default_sd_policy()).unwrap();
        let e = t.test(Parameter::RomS, Comparison::T0VsT1).unwrap();
        assert_eq!(e.subjects, vec!["2".to_string(), "10".to_string()]);
        match &e.outcome {
            TestOutcome::Done { two_sided, .. } => assert_eq!(two_sided.exact_fraction, Some((2, 4))),
            other => panic!("{other:?}"),
        }
        let table = t.table("III").unwrap();
        let subjects: Vec<&str> = table.rows.iter().map(|r| r.subject.as_str()).collect();
        assert_eq!(subjects, vec!["2", "3", "10"]);
        // no controls: the AC vs HC comparisons are skipped, not failed
        match &t.test(Parameter::RomS, Comparison::T0VsHc).unwrap().outcome {
            TestOutcome::Skipped { .. } => {}
            other => panic!("{other:?}"),
        }
    }
}
