//! Per-session kinematic scalars: ranges of motion, activation times,
//! scapular onset lead and the scapulohumeral ratio.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::anatomy::{calibrate, joint_angles, Joint, SensorSite};
use crate::config::AnalysisConfig;
use crate::error::{PipelineError, Stage, StageError};
use crate::fusion::{estimate, OrientationSeries};
use crate::segment::{
    align_repetition, alignment_windows, detect_onset, find_repetitions, smooth, OnsetEvent, Repetition, SegmentConfig,
    SegmentError, Trace,
};
use crate::session::{SessionData, Side, TaskKind};
use crate::stats::cohort::ParameterRecord;

#[derive(Clone, Debug, PartialEq)]
pub enum ParamsError {
    NoValidRepetition,
    OutOfRange { repetition: usize },
    Segment(SegmentError),
}

impl fmt::Display for ParamsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamsError::NoValidRepetition => f.write_str("no valid repetition"),
            ParamsError::OutOfRange { repetition } => {
                write!(f, "repetition {repetition} lies outside the series")
            }
            ParamsError::Segment(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for ParamsError {}

impl From<SegmentError> for ParamsError {
    fn from(e: SegmentError) -> Self {
        ParamsError::Segment(e)
    }
}

/// Range of motion over the valid repetitions, degrees.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RomSummary {
    pub mean: f64,
    pub max: f64,
    pub per_repetition: Vec<f64>,
}

/// `max - min` of `series` over each valid repetition.
pub fn extract_rom(series: &Trace, reps: &[Repetition]) -> Result<RomSummary, ParamsError> {
    let mut per_repetition = Vec::new();
    for r in reps.iter().filter(|r| r.valid) {
        if r.start_idx > r.end_idx || r.end_idx >= series.len() {
            return Err(ParamsError::OutOfRange { repetition: r.index });
        }
        let span = &series.v[r.start_idx..=r.end_idx];
        let hi = span.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = span.iter().cloned().fold(f64::INFINITY, f64::min);
        per_repetition.push(hi - lo);
    }
    if per_repetition.is_empty() {
        return Err(ParamsError::NoValidRepetition);
    }
    let mean = per_repetition.iter().sum::<f64>() / per_repetition.len() as f64;
    let max = per_repetition.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(RomSummary { mean, max, per_repetition })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepActivation {
    pub index: usize,
    pub humerus: OnsetEvent,
    pub scapula: OnsetEvent,
    /// The humeral repetition re-anchored on the scapular trace.
    pub scapula_repetition: Repetition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Activation {
    pub act_time_scapula: f64,
    pub act_time_humerus: f64,
    /// Mean of `t_onset(humerus) - t_onset(scapula)`; positive when the scapula leads.
    pub onset_lead: f64,
    pub per_repetition: Vec<RepActivation>,
}

/// Onsets of both segments for every valid humeral repetition.
///
/// Each scapular repetition is searched between the midpoints to the
/// neighbouring humeral peaks.
pub fn extract_activation(
    scapula: &Trace,
    humerus: &Trace,
    reps: &[Repetition],
    cfg: &SegmentConfig,
) -> Result<Activation, ParamsError> {
    let mut per_repetition = Vec::new();
    for (r, window) in reps.iter().zip(alignment_windows(reps)) {
        if !r.valid {
            continue;
        }
        let h = detect_onset(humerus, r, cfg)?;
        let sr = align_repetition(scapula, r, window)?;
        let s = detect_onset(scapula, &sr, cfg)?;
        per_repetition.push(RepActivation { index: r.index, humerus: h, scapula: s, scapula_repetition: sr });
    }
    if per_repetition.is_empty() {
        return Err(ParamsError::NoValidRepetition);
    }
    let n = per_repetition.len() as f64;
    let mean = |f: &dyn Fn(&RepActivation) -> f64| per_repetition.iter().map(f).sum::<f64>() / n;
    Ok(Activation {
        act_time_scapula: mean(&|a| a.scapula.activation_time()),
        act_time_humerus: mean(&|a| a.humerus.activation_time()),
        onset_lead: mean(&|a| a.humerus.t_onset - a.scapula.t_onset),
        per_repetition,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepetitionDetail {
    pub task: TaskKind,
    pub repetition: Repetition,
    /// Range of motion of the task's primary angle.
    pub rom: f64,
    pub humerus_onset: Option<OnsetEvent>,
    pub scapula_repetition: Option<Repetition>,
    pub rom_scapula: Option<f64>,
    pub scapula_onset: Option<OnsetEvent>,
}

/// Absent fields mean the task or stream was not available, never zero.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionParameters {
    pub rom_e: Option<RomSummary>,
    pub rom_a: Option<RomSummary>,
    pub rom_s: Option<RomSummary>,
    pub act_time_scapula: Option<f64>,
    pub act_time_humerus: Option<f64>,
    pub onset_lead_scapula: Option<f64>,
    pub shr_ratio: Option<f64>,
    pub n_repetitions: usize,
    pub repetitions: Vec<RepetitionDetail>,
    /// Non-fatal problems, e.g. a scapula that never crossed the onset threshold.
    pub flags: Vec<String>,
}

impl SessionParameters {
    /// Cohort-table row for this session.
    pub fn record(&self, subject: &str, group: crate::session::Group, timepoint: crate::session::Timepoint) -> ParameterRecord {
        ParameterRecord {
            subject: subject.into(),
            group,
            timepoint,
            rom_e: self.rom_e.as_ref().map(|r| r.mean),
            rom_a: self.rom_a.as_ref().map(|r| r.mean),
            rom_s: self.rom_s.as_ref().map(|r| r.mean),
            act_time_scapula: self.act_time_scapula,
            act_time_humerus: self.act_time_humerus,
            onset_lead_scapula: self.onset_lead_scapula,
            shr_ratio: self.shr_ratio,
        }
    }
}

/// One task's traces and the repetitions found in them.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskAnalysis {
    pub kind: TaskKind,
    /// Primary angle (elevation), as measured.
    pub primary: Trace,
    pub primary_smoothed: Trace,
    pub scapula: Option<Trace>,
    pub repetitions: Vec<Repetition>,
    pub rom: RomSummary,
    pub rom_scapula: Option<RomSummary>,
    pub activation: Option<Activation>,
    pub details: Vec<RepetitionDetail>,
    pub flags: Vec<String>,
}

/// Segments one task and extracts its scalars.
///
/// Repetitions whose humeral onset cannot be found are kept but marked
/// invalid. Segmentation and onsets use the smoothed traces; ranges of motion
/// use the traces as given.
pub fn analyze_task(
    kind: TaskKind,
    primary: &Trace,
    scapula: Option<&Trace>,
    cfg: &SegmentConfig,
) -> Result<TaskAnalysis, ParamsError> {
    let smoothed = smooth(primary, cfg.smoothing_window)?;
    let mut reps = find_repetitions(&smoothed, cfg)?;
    let mut onsets = Vec::with_capacity(reps.len());
    for r in reps.iter_mut() {
        let on = detect_onset(&smoothed, r, cfg).ok();
        r.valid = on.is_some();
        onsets.push(on);
    }
    let rom = extract_rom(primary, &reps)?;
    let mut flags = Vec::new();
    for (r, on) in reps.iter().zip(&onsets) {
        if on.is_none() {
            flags.push(format!("{kind:?} repetition {}: no humeral onset, excluded", r.index));
        }
    }

    let mut details: Vec<RepetitionDetail> = reps
        .iter()
        .zip(&onsets)
        .filter(|(r, _)| r.valid)
        .zip(&rom.per_repetition)
        .map(|((r, on), &rom)| RepetitionDetail {
            task: kind,
            repetition: *r,
            rom,
            humerus_onset: *on,
            scapula_repetition: None,
            rom_scapula: None,
            scapula_onset: None,
        })
        .collect();

    let mut rom_scapula = None;
    let mut activation = None;
    let mut scapula_trace = None;
    if let Some(scap) = scapula {
        let scap_smoothed = smooth(scap, cfg.smoothing_window)?;
        // scapular ROM only needs the repetition span, not the onset
        let mut aligned = Vec::new();
        for (r, window) in reps.iter().zip(alignment_windows(&reps)) {
            if !r.valid {
                continue;
            }
            match align_repetition(&scap_smoothed, r, window) {
                Ok(a) => aligned.push(a),
                Err(e) => flags.push(format!("{kind:?} repetition {}: scapula: {e}", r.index)),
            }
        }
        match extract_rom(scap, &aligned) {
            Ok(s) => {
                for (a, &v) in aligned.iter().zip(&s.per_repetition) {
                    if let Some(d) = details.iter_mut().find(|d| d.repetition.index == a.index) {
                        d.scapula_repetition = Some(*a);
                        d.rom_scapula = Some(v);
                    }
                }
                rom_scapula = Some(s);
            }
            Err(e) => flags.push(format!("{kind:?}: scapular ROM unavailable: {e}")),
        }
        match extract_activation(&scap_smoothed, &smoothed, &reps, cfg) {
            Ok(act) => {
                for a in &act.per_repetition {
                    if let Some(d) = details.iter_mut().find(|d| d.repetition.index == a.index) {
                        d.scapula_onset = Some(a.scapula);
                    }
                }
                activation = Some(act);
            }
            Err(e) => flags.push(format!("{kind:?}: scapular activation unavailable: {e}")),
        }
        scapula_trace = Some(scap.clone());
    }

    Ok(TaskAnalysis {
        kind,
        primary: primary.clone(),
        primary_smoothed: smoothed,
        scapula: scapula_trace,
        repetitions: reps,
        rom,
        rom_scapula,
        activation,
        details,
        flags,
    })
}

fn pooled(parts: &[&RomSummary]) -> Option<RomSummary> {
    let per_repetition: Vec<f64> = parts.iter().flat_map(|r| r.per_repetition.iter().cloned()).collect();
    if per_repetition.is_empty() {
        return None;
    }
    let mean = per_repetition.iter().sum::<f64>() / per_repetition.len() as f64;
    let max = per_repetition.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some(RomSummary { mean, max, per_repetition })
}

/// Combines per-task analyses into session scalars.
///
/// Several windows of the same task pool their repetitions. Activation
/// times come from the abduction task.
pub fn combine(tasks: &[TaskAnalysis]) -> SessionParameters {
    let of = |k: TaskKind| tasks.iter().filter(move |t| t.kind == k);
    let rom_e = pooled(&of(TaskKind::Elevation).map(|t| &t.rom).collect::<Vec<_>>());
    let rom_a = pooled(&of(TaskKind::Abduction).map(|t| &t.rom).collect::<Vec<_>>());
    let rom_s = pooled(&of(TaskKind::Abduction).filter_map(|t| t.rom_scapula.as_ref()).collect::<Vec<_>>());

    let acts: Vec<&RepActivation> = of(TaskKind::Abduction)
        .filter_map(|t| t.activation.as_ref())
        .flat_map(|a| a.per_repetition.iter())
        .collect();
    let mean = |f: &dyn Fn(&RepActivation) -> f64| {
        (!acts.is_empty()).then(|| acts.iter().map(|a| f(a)).sum::<f64>() / acts.len() as f64)
    };
    let mut act_time_humerus = mean(&|a| a.humerus.activation_time());
    if act_time_humerus.is_none() {
        let hum: Vec<f64> = of(TaskKind::Abduction)
            .flat_map(|t| t.details.iter())
            .filter_map(|d| d.humerus_onset.map(|o| o.activation_time()))
            .collect();
        if !hum.is_empty() {
            act_time_humerus = Some(hum.iter().sum::<f64>() / hum.len() as f64);
        }
    }

    let shr_ratio = match (&rom_a, &rom_s) {
        (Some(a), Some(s)) if s.mean > 0.0 => Some(a.mean / s.mean),
        _ => None,
    };
    SessionParameters {
        act_time_scapula: mean(&|a| a.scapula.activation_time()),
        act_time_humerus,
        onset_lead_scapula: mean(&|a| a.humerus.t_onset - a.scapula.t_onset),
        shr_ratio,
        n_repetitions: tasks.iter().map(|t| t.details.len()).sum(),
        repetitions: tasks.iter().flat_map(|t| t.details.iter().cloned()).collect(),
        flags: tasks.iter().flat_map(|t| t.flags.iter().cloned()).collect(),
        rom_e,
        rom_a,
        rom_s,
    }
}

/// Everything `extract_session` computed on the way to the scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionAnalysis {
    pub parameters: SessionParameters,
    pub tasks: Vec<TaskAnalysis>,
}

/// Runs fusion, calibration, joint angles, segmentation and extraction.
pub fn extract_session(data: &SessionData, cfg: &AnalysisConfig) -> Result<SessionAnalysis, PipelineError> {
    let m = &data.manifest;
    if data.streams.values().all(|s| s.is_empty()) {
        return Err(PipelineError::new(Stage::Io, m.subject.as_str(), StageError::EmptySession));
    }
    m.validate_streams(&data.streams)
        .map_err(|e| PipelineError::new(Stage::Io, "manifest", StageError::Manifest(e)))?;

    let mut orientations: BTreeMap<SensorSite, OrientationSeries> = BTreeMap::new();
    for (&site, stream) in &data.streams {
        let o = estimate(stream, &cfg.fusion)
            .map_err(|e| PipelineError::new(Stage::Fusion, site.name(), StageError::Fusion(e)))?;
        orientations.insert(site, o);
    }
    let cal = calibrate(&orientations, (m.calibration[0], m.calibration[1]))
        .map_err(|e| PipelineError::new(Stage::Calib, "", StageError::Calibration(e)))?;

    let mut flags = Vec::new();
    let angles = |joint: Joint| {
        joint_angles(&orientations, &cal, joint)
            .map(|s| s.primary())
            .map_err(|e| PipelineError::new(Stage::Calib, format!("{joint:?}"), StageError::Angles(e)))
    };
    let elevation_joint = match cfg.elevation_reference {
        SensorSite::Forearm if orientations.contains_key(&SensorSite::Forearm) => Joint::ForearmThoracic,
        SensorSite::Forearm => {
            flags.push(String::from("no forearm stream; elevation taken from the humerus"));
            Joint::Humerothoracic
        }
        _ => Joint::Humerothoracic,
    };
    let has = |k: TaskKind| m.tasks.iter().any(|t| t.kind == k);
    let elevation = if has(TaskKind::Elevation) { Some(angles(elevation_joint)?) } else { None };
    let humerus = if has(TaskKind::Abduction) { Some(angles(Joint::Humerothoracic)?) } else { None };
    let scapula = if has(TaskKind::Abduction) && orientations.contains_key(&SensorSite::Scapula) {
        let sign = if m.side == Side::Left { -1.0 } else { 1.0 };
        Some(angles(Joint::Scapulothoracic)?.map(|x| sign * x))
    } else {
        None
    };

    let mut tasks = Vec::new();
    for (i, w) in m.tasks.iter().enumerate() {
        let context = format!("task {i} ({:?})", w.kind);
        let stage_err = |e: ParamsError| {
            let stage = if matches!(e, ParamsError::Segment(_)) { Stage::Segment } else { Stage::Params };
            PipelineError::new(stage, context.as_str(), StageError::Params(e))
        };
        let (primary, scap) = match w.kind {
            TaskKind::Elevation => (elevation.as_ref(), None),
            TaskKind::Abduction => (humerus.as_ref(), scapula.as_ref()),
        };
        let primary = primary.expect("angle series computed for every declared task").window(w.start, w.end);
        let scap = scap.map(|s| s.window(w.start, w.end));
        tasks.push(analyze_task(w.kind, &primary, scap.as_ref(), &cfg.segment).map_err(stage_err)?);
    }
    let mut parameters = combine(&tasks);
    parameters.flags.splice(0..0, flags);
    Ok(SessionAnalysis { parameters, tasks })
}
