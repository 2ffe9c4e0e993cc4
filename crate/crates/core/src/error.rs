use alloc::string::String;
use core::fmt;

use crate::anatomy::{AngleError, CalibrationError};
use crate::fusion::FusionError;
use crate::params::ParamsError;
use crate::segment::SegmentError;
use crate::session::ManifestError;
use crate::stats::StatsError;

/// Pipeline stage, used to label diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Io,
    Fusion,
    Calib,
    Segment,
    Params,
    Stats,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Io => "io",
            Stage::Fusion => "fusion",
            Stage::Calib => "calib",
            Stage::Segment => "segment",
            Stage::Params => "params",
            Stage::Stats => "stats",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StageError {
    Manifest(ManifestError),
    Fusion(FusionError),
    Calibration(CalibrationError),
    Angles(AngleError),
    Segment(SegmentError),
    Params(ParamsError),
    Stats(StatsError),
    EmptySession,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageError::Manifest(e) => e.fmt(f),
            StageError::Fusion(e) => e.fmt(f),
            StageError::Calibration(e) => e.fmt(f),
            StageError::Angles(e) => e.fmt(f),
            StageError::Segment(e) => e.fmt(f),
            StageError::Params(e) => e.fmt(f),
            StageError::Stats(e) => e.fmt(f),
            StageError::EmptySession => f.write_str("session contains no samples"),
        }
    }
}

/// An error from somewhere in the session pipeline, tagged with its stage.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineError {
    pub stage: Stage,
    /// What was being processed, e.g. a site or task name; may be empty.
    pub context: String,
    pub error: StageError,
}

impl PipelineError {
    pub fn new(stage: Stage, context: impl Into<String>, error: StageError) -> Self {
        Self { stage, context: context.into(), error }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.context.is_empty() {
            write!(f, "[{}] {}", self.stage, self.error)
        } else {
            write!(f, "[{}] {}: {}", self.stage, self.context, self.error)
        }
    }
}

impl core::error::Error for PipelineError {}
