//! Synthesize a session, push it through the file formats, analyze it and
//! compare against the ground truth.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use shoulder_core::params::{extract_session, SessionAnalysis, SessionParameters};
use shoulder_core::synth::{
    compare, synthesize_session, Comparison, ExpectedParameters, MotionProfile, Tolerances,
};
use shoulder_core::{AnalysisConfig, ImuSample};

use crate::sessionio::stream::round_value;
use crate::sessionio::{read_session, session_files, write_session};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub subject: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub expected: ExpectedParameters,
    pub parameters: SessionParameters,
    pub comparison: Comparison,
    /// Every value read back equals the written value rounded to nine
    /// significant digits.
    pub values_preserved: bool,
    /// Writing the re-read session reproduces the first files byte for byte.
    pub rewrite_identical: bool,
}

impl RoundTripReport {
    pub fn pass(&self) -> bool {
        self.comparison.pass && self.values_preserved && self.rewrite_identical
    }
}

fn rounded(s: &ImuSample) -> [f64; 10] {
    [s.t, s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z, s.mag.x, s.mag.y, s.mag.z].map(round_value)
}

fn raw(s: &ImuSample) -> [f64; 10] {
    [s.t, s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z, s.mag.x, s.mag.y, s.mag.z]
}

/// Runs the whole chain through a temporary directory.
pub fn round_trip_report(
    profile: &MotionProfile,
    cfg: &AnalysisConfig,
) -> Result<(RoundTripReport, SessionAnalysis), Error> {
    let (truth, data) = synthesize_session(profile)?;
    let tmp = tempfile::tempdir().map_err(|e| {
        Error::Io(crate::sessionio::IoError::Io { path: "temporary directory".into(), source: e })
    })?;
    let dir = tmp.path().join("session");
    write_session(&data, &dir)?;
    let back = read_session(&dir)?;

    let values_preserved = data.streams.len() == back.streams.len()
        && data.streams.iter().zip(&back.streams).all(|((sa, a), (sb, b))| {
            sa == sb && a.len() == b.len() && a.iter().zip(b).all(|(x, y)| rounded(x) == raw(y))
        })
        && data.manifest == back.manifest;
    let rewrite_identical = session_files(&data)? == session_files(&back)?;

    let analysis = extract_session(&back, cfg)?;
    let expected = truth.expected(&cfg.segment)?;
    let tolerances = Tolerances::for_profile(profile);
    let comparison = compare(&expected, &analysis.parameters, &tolerances);
    let report = RoundTripReport {
        subject: profile.subject.clone(),
        seed: profile.seed,
        tolerances,
        expected,
        parameters: analysis.parameters.clone(),
        comparison,
        values_preserved,
        rewrite_identical,
    };
    Ok((report, analysis))
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Plain-text table of the comparison, one row per parameter.
pub fn render(report: &RoundTripReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<22} {:>10} {:>10} {:>10} {:>10}  result",
        "parameter", "truth", "measured", "abs_error", "tolerance"
    );
    for r in &report.comparison.rows {
        let _ = writeln!(
            out,
            "{:<22} {:>10.4} {:>10} {:>10} {:>10}  {}",
            r.parameter,
            r.truth,
            num(r.measured),
            num(r.abs_error),
            r.tolerance.map_or_else(|| "report".to_string(), |t| t.to_string()),
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(out, "values preserved through files: {}", yes_no(report.values_preserved));
    let _ = writeln!(out, "rewrite byte-identical: {}", yes_no(report.rewrite_identical));
    let _ = writeln!(out, "overall: {}", if report.pass() { "PASS" } else { "FAIL" });
    out
}
