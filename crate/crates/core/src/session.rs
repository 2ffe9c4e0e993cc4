//! Session description: who was measured, which tasks, and where the streams are.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::anatomy::SensorSite;
use crate::fusion::ImuSample;

/// Current manifest and config schema version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Group {
    /// Adhesive capsulitis patients.
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "AC"))]
    Ac,
    /// Healthy controls.
    #[cfg_attr(feature = "serde", serde(rename = "HC"))]
    Hc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Timepoint {
    T0,
    T1,
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "none"))]
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    Left,
    #[default]
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TaskKind {
    /// Forward elevation in the sagittal plane.
    Elevation,
    /// Abduction in the frontal plane.
    Abduction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TaskWindow {
    pub kind: TaskKind,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SessionManifest {
    pub schema_version: u32,
    pub subject: String,
    pub group: Group,
    #[cfg_attr(feature = "serde", serde(default))]
    pub timepoint: Timepoint,
    #[cfg_attr(feature = "serde", serde(default))]
    pub side: Side,
    #[cfg_attr(feature = "serde", serde(default))]
    pub sample_rate_hz: Option<f64>,
    /// Static calibration posture, `[t0, t1]` in s.
    pub calibration: [f64; 2],
    pub tasks: Vec<TaskWindow>,
    /// Stream file per site, relative to the manifest.
    pub streams: BTreeMap<SensorSite, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ManifestError {
    UnsupportedSchema(u32),
    BadCalibrationWindow,
    BadTaskWindow { index: usize },
    TaskBeforeCalibration { index: usize },
    OverlappingTasks { first: usize, second: usize },
    NoStreams,
    OutsideStream { site: SensorSite, start: f64, end: f64 },
    MissingStream(SensorSite),
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifestError::UnsupportedSchema(v) => {
                write!(f, "unsupported schema_version {v} (expected {SCHEMA_VERSION})")
            }
            ManifestError::BadCalibrationWindow => {
                f.write_str("calibration window must be finite with t0 < t1")
            }
            ManifestError::BadTaskWindow { index } => {
                write!(f, "task {index}: window must be finite with start < end")
            }
            ManifestError::TaskBeforeCalibration { index } => {
                write!(f, "task {index}: calibration window must precede every task window")
            }
            ManifestError::OverlappingTasks { first, second } => {
                write!(f, "task windows {first} and {second} overlap")
            }
            ManifestError::NoStreams => f.write_str("manifest lists no streams"),
            ManifestError::OutsideStream { site, start, end } => write!(
                f,
                "window [{start}, {end}] lies outside the {site} stream extent"
            ),
            ManifestError::MissingStream(site) => write!(f, "no samples for {site}"),
        }
    }
}

impl core::error::Error for ManifestError {}

impl SessionManifest {
    /// Checks the manifest on its own.
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ManifestError::UnsupportedSchema(self.schema_version));
        }
        let [c0, c1] = self.calibration;
        if !(c0.is_finite() && c1.is_finite() && c0 < c1) {
            return Err(ManifestError::BadCalibrationWindow);
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if !(t.start.is_finite() && t.end.is_finite() && t.start < t.end) {
                return Err(ManifestError::BadTaskWindow { index: i });
            }
            if t.start < c1 {
                return Err(ManifestError::TaskBeforeCalibration { index: i });
            }
        }
        for i in 0..self.tasks.len() {
            for j in i + 1..self.tasks.len() {
                let (a, b) = (&self.tasks[i], &self.tasks[j]);
                if a.start < b.end && b.start < a.end {
                    return Err(ManifestError::OverlappingTasks { first: i, second: j });
                }
            }
        }
        if self.streams.is_empty() {
            return Err(ManifestError::NoStreams);
        }
        Ok(())
    }

    /// Checks the manifest against the loaded streams.
    pub fn validate_streams(&self, streams: &BTreeMap<SensorSite, Vec<ImuSample>>) -> Result<(), ManifestError> {
        self.validate()?;
        for &site in self.streams.keys() {
            let s = streams.get(&site).filter(|s| !s.is_empty()).ok_or(ManifestError::MissingStream(site))?;
            let (first, last) = (s[0].t, s[s.len() - 1].t);
            let [c0, c1] = self.calibration;
            if c0 < first || c1 > last {
                return Err(ManifestError::OutsideStream { site, start: c0, end: c1 });
            }
            for t in &self.tasks {
                if t.start < first || t.end > last {
                    return Err(ManifestError::OutsideStream { site, start: t.start, end: t.end });
                }
            }
        }
        Ok(())
    }
}

/// A manifest with its streams loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionData {
    pub manifest: SessionManifest,
    pub streams: BTreeMap<SensorSite, Vec<ImuSample>>,
}
