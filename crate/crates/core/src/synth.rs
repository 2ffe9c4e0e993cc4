//! Forward-kinematics session generator.
//!
//! Segments follow raised-cosine repetitions; the IMU signals are what a
//! rigidly mounted sensor would read on those exact orientations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand_core::RngCore;
use rand_pcg::Pcg32;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::anatomy::SensorSite;
use crate::config::AnalysisConfig;
use crate::error::PipelineError;
use crate::fusion::{ImuSample, OrientationSample, OrientationSeries};
use crate::geom::{UnitQuaternion, Vec3};
use crate::params::{analyze_task, extract_session, ParamsError, SessionAnalysis, SessionParameters};
use crate::segment::{SegmentConfig, Trace};
use crate::session::{
    Group, SessionData, SessionManifest, Side, TaskKind, TaskWindow, Timepoint, SCHEMA_VERSION,
};
use crate::STANDARD_GRAVITY;

/// Identifier of the noise generator: PCG32 (XSH-RR, 64-bit state) seeded
/// with `(seed, site index)`, one Box–Muller cosine draw per normal deviate.
pub const RNG_ALGORITHM: &str = "pcg32-boxmuller-v1";

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MotionTask {
    pub kind: TaskKind,
    pub n_reps: usize,
    /// Duration of one repetition, s.
    pub period: f64,
    /// Peak humeral elevation, degrees.
    pub peak: f64,
    /// Scapular upward rotation per degree of humeral elevation.
    pub scapula_share: f64,
    /// Scapular start relative to the humerus, s; negative means the scapula leads.
    pub scapula_lag: f64,
}

impl Default for MotionTask {
    fn default() -> Self {
        Self {
            kind: TaskKind::Abduction,
            n_reps: 5,
            period: 1.5,
            peak: 120.0,
            scapula_share: 1.0 / 3.0,
            scapula_lag: -0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NoiseProfile {
    /// m/s²
    pub accel_sigma: f64,
    /// rad/s
    pub gyro_sigma: f64,
    /// In units of the field magnitude.
    pub mag_sigma: f64,
    /// Constant gyro offset in the sensor frame, rad/s.
    pub gyro_bias: Vec3,
}

impl NoiseProfile {
    pub fn none() -> Self {
        Self::default()
    }

    /// White noise of a typical MEMS unit, without bias.
    pub fn typical() -> Self {
        Self { accel_sigma: 0.05, gyro_sigma: 0.005, mag_sigma: 0.01, gyro_bias: Vec3::ZERO }
    }

    /// `typical` plus a 0.002 rad/s gyro bias on every axis.
    pub fn biased() -> Self {
        Self { gyro_bias: Vec3::new(0.002, 0.002, 0.002), ..Self::typical() }
    }

    pub fn is_zero(&self) -> bool {
        self.accel_sigma == 0.0 && self.gyro_sigma == 0.0 && self.mag_sigma == 0.0 && self.gyro_bias == Vec3::ZERO
    }

    /// Every term multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            accel_sigma: self.accel_sigma * k,
            gyro_sigma: self.gyro_sigma * k,
            mag_sigma: self.mag_sigma * k,
            gyro_bias: self.gyro_bias * k,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MotionProfile {
    pub subject: String,
    pub group: Group,
    pub timepoint: Timepoint,
    pub side: Side,
    pub tasks: Vec<MotionTask>,
    /// Pause before and after every repetition, s.
    pub rest: f64,
    /// Upright still period at the start, s.
    pub calibration_hold: f64,
    /// Hz
    pub sample_rate: f64,
    /// Sensor orientation relative to its segment.
    pub mounting: BTreeMap<SensorSite, UnitQuaternion>,
    pub include_forearm: bool,
    /// Distance from the shoulder to the humeral sensor, m. When set, the
    /// accelerometers also see the linear acceleration of the swinging arm.
    pub lever_arm: Option<f64>,
    pub noise: NoiseProfile,
    pub seed: u64,
    pub rng: String,
}

impl Default for MotionProfile {
    fn default() -> Self {
        let deg = PI / 180.0;
        let mounting = [
            (SensorSite::Thorax, UnitQuaternion::rot_x(10.0 * deg) * UnitQuaternion::rot_y(-20.0 * deg)),
            (SensorSite::Scapula, UnitQuaternion::rot_z(25.0 * deg) * UnitQuaternion::rot_y(40.0 * deg)),
            (SensorSite::Humerus, UnitQuaternion::rot_y(30.0 * deg)),
            (SensorSite::Forearm, UnitQuaternion::rot_y(-15.0 * deg) * UnitQuaternion::rot_x(5.0 * deg)),
        ]
        .into_iter()
        .collect();
        Self {
            subject: "synthetic".to_string(),
            group: Group::Hc,
            timepoint: Timepoint::None,
            side: Side::Right,
            tasks: alloc::vec![MotionTask::default()],
            rest: 1.0,
            calibration_hold: 3.0,
            sample_rate: 100.0,
            mounting,
            include_forearm: false,
            lever_arm: None,
            noise: NoiseProfile::none(),
            seed: 1,
            rng: RNG_ALGORITHM.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SynthError {
    InvalidProfile(String),
    Reference(ParamsError),
    Pipeline(PipelineError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidProfile(why) => write!(f, "invalid profile: {why}"),
            SynthError::Reference(e) => write!(f, "reference detection failed: {e}"),
            SynthError::Pipeline(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for SynthError {}

impl From<PipelineError> for SynthError {
    fn from(e: PipelineError) -> Self {
        SynthError::Pipeline(e)
    }
}

impl MotionProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |why: String| Err(SynthError::InvalidProfile(why));
        if self.rng != RNG_ALGORITHM {
            return bad(format!("unknown rng {:?}, expected {RNG_ALGORITHM:?}", self.rng));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return bad("sample_rate must be positive".into());
        }
        if !(self.rest > 0.0 && self.rest.is_finite()) {
            return bad("rest must be positive".into());
        }
        if !(self.calibration_hold >= 2.0 && self.calibration_hold.is_finite()) {
            return bad("calibration_hold must be at least 2 s".into());
        }
        if self.tasks.is_empty() {
            return bad("no tasks".into());
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if t.n_reps == 0 {
                return bad(format!("task {i}: n_reps must be at least 1"));
            }
            if !(t.peak > 0.0 && t.peak < 180.0) {
                return bad(format!("task {i}: peak must lie in (0, 180) degrees"));
            }
            if !(t.period > 0.0 && t.period.is_finite()) {
                return bad(format!("task {i}: period must be positive"));
            }
            if !(t.scapula_share >= 0.0 && t.scapula_share * t.peak < 89.0) {
                return bad(format!("task {i}: scapular rotation must stay within [0, 89) degrees"));
            }
            if !(t.scapula_lag.abs() < self.rest / 2.0) {
                return bad(format!("task {i}: |scapula_lag| must be below rest / 2"));
            }
        }
        let n = &self.noise;
        let sigmas = [n.accel_sigma, n.gyro_sigma, n.mag_sigma];
        if sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) || !n.gyro_bias.is_finite() {
            return bad("noise terms must be finite and non-negative".into());
        }
        if let Some(l) = self.lever_arm {
            if !(l >= 0.0 && l.is_finite()) {
                return bad("lever_arm must be non-negative".into());
            }
        }
        Ok(())
    }

    pub fn sites(&self) -> Vec<SensorSite> {
        let mut s = alloc::vec![SensorSite::Thorax, SensorSite::Scapula, SensorSite::Humerus];
        if self.include_forearm {
            s.push(SensorSite::Forearm);
        }
        s
    }
}

/// Ground truth of one repetition. Onset and attain times follow the
/// detector's definitions applied to the noise-free, unsmoothed waveform.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepTruth {
    pub index: usize,
    /// Motion start of the humerus, s.
    pub start: f64,
    /// Motion start of the scapula, s.
    pub scapula_start: f64,
    pub period: f64,
    pub rom: f64,
    pub rom_scapula: f64,
    pub onset: Option<f64>,
    pub scapula_onset: Option<f64>,
    pub attain: f64,
    pub scapula_attain: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskTruth {
    pub window: TaskWindow,
    pub reps: Vec<RepTruth>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub segments: BTreeMap<SensorSite, OrientationSeries>,
    /// Humeral elevation, degrees.
    pub humerothoracic: Trace,
    /// Scapular upward rotation, degrees, positive on either side.
    pub scapulothoracic: Trace,
    pub calibration: [f64; 2],
    pub tasks: Vec<TaskTruth>,
}

fn raised_cosine(peak: f64, period: f64, tau: f64) -> f64 {
    if (0.0..=period).contains(&tau) {
        peak * 0.5 * (1.0 - (2.0 * PI * tau / period).cos())
    } else {
        0.0
    }
}

/// First time into a raised-cosine repetition at which the speed exceeds
/// `v_on`, if it does so for at least `hold`.
fn analytic_onset(peak: f64, period: f64, v_on: f64, hold: f64) -> Option<f64> {
    let x = v_on * period / (PI * peak);
    if x >= 1.0 {
        return None;
    }
    let tau = period / (2.0 * PI) * x.asin();
    (period / 2.0 - 2.0 * tau >= hold).then_some(tau)
}

fn analytic_attain(period: f64, fraction: f64) -> f64 {
    period / (2.0 * PI) * (1.0 - 2.0 * fraction).acos()
}

struct Schedule {
    kind: TaskKind,
    task: MotionTask,
    starts: Vec<f64>,
}

fn schedule(profile: &MotionProfile) -> (Vec<(TaskWindow, Schedule)>, f64) {
    let mut cursor = profile.calibration_hold;
    let mut out = Vec::new();
    for task in &profile.tasks {
        let start = cursor;
        let starts: Vec<f64> = (0..task.n_reps)
            .map(|k| start + profile.rest + k as f64 * (task.period + profile.rest))
            .collect();
        cursor = start + profile.rest + task.n_reps as f64 * (task.period + profile.rest);
        let window = TaskWindow { kind: task.kind, start, end: cursor };
        out.push((window, Schedule { kind: task.kind, task: *task, starts }));
    }
    (out, cursor)
}

/// Builds segment orientations and angle traces for `profile`.
pub fn generate_truth(profile: &MotionProfile) -> Result<GroundTruth, SynthError> {
    profile.validate()?;
    let (plan, total) = schedule(profile);
    // Round up so the last sample is not before the end of the last task.
    let n = (total * profile.sample_rate - 1e-9).ceil() as usize + 1;
    let t: Vec<f64> = (0..n).map(|k| k as f64 / profile.sample_rate).collect();
    let deg = PI / 180.0;
    let side = if profile.side == Side::Left { -1.0 } else { 1.0 };

    let mut theta = alloc::vec![0.0; n];
    let mut phi = alloc::vec![0.0; n];
    let mut kind_at = alloc::vec![None; n];
    for (_, s) in &plan {
        let MotionTask { period, peak, scapula_share, scapula_lag, .. } = s.task;
        for &start in &s.starts {
            for (k, &tk) in t.iter().enumerate() {
                let h = raised_cosine(peak, period, tk - start);
                let sc = raised_cosine(scapula_share * peak, period, tk - start - scapula_lag);
                if h != 0.0 {
                    theta[k] = h;
                    kind_at[k] = Some(s.kind);
                }
                if sc != 0.0 {
                    phi[k] = sc;
                }
            }
        }
    }

    let humerus: Vec<UnitQuaternion> = (0..n)
        .map(|k| match kind_at[k] {
            Some(TaskKind::Elevation) => UnitQuaternion::rot_z(-theta[k] * deg),
            Some(TaskKind::Abduction) => UnitQuaternion::rot_x(side * theta[k] * deg),
            None => UnitQuaternion::IDENTITY,
        })
        .collect();
    let series = |qs: &[UnitQuaternion]| OrientationSeries {
        samples: t.iter().zip(qs).map(|(&t, &q)| OrientationSample { t, q }).collect(),
    };
    let scapula: Vec<UnitQuaternion> = phi.iter().map(|&p| UnitQuaternion::rot_x(side * p * deg)).collect();
    let mut segments = BTreeMap::new();
    segments.insert(SensorSite::Thorax, series(&alloc::vec![UnitQuaternion::IDENTITY; n]));
    segments.insert(SensorSite::Scapula, series(&scapula));
    segments.insert(SensorSite::Humerus, series(&humerus));
    if profile.include_forearm {
        segments.insert(SensorSite::Forearm, series(&humerus));
    }

    let seg = SegmentConfig::default();
    let tasks = plan
        .iter()
        .map(|(window, s)| {
            let MotionTask { period, peak, scapula_share, scapula_lag, .. } = s.task;
            let attain = analytic_attain(period, seg.attain_fraction);
            let reps = s
                .starts
                .iter()
                .enumerate()
                .map(|(index, &start)| RepTruth {
                    index,
                    start,
                    scapula_start: start + scapula_lag,
                    period,
                    rom: peak,
                    rom_scapula: scapula_share * peak,
                    onset: analytic_onset(peak, period, seg.onset_velocity, seg.onset_hold).map(|x| start + x),
                    scapula_onset: analytic_onset(scapula_share * peak, period, seg.onset_velocity, seg.onset_hold)
                        .map(|x| start + scapula_lag + x),
                    attain: start + attain,
                    scapula_attain: start + scapula_lag + attain,
                })
                .collect();
            TaskTruth { window: *window, reps }
        })
        .collect();

    let hold = profile.calibration_hold;
    Ok(GroundTruth {
        segments,
        humerothoracic: Trace { t: t.clone(), v: theta },
        scapulothoracic: Trace { t, v: phi },
        calibration: [0.5, hold - 0.5],
        tasks,
    })
}

impl GroundTruth {
    /// Manifest describing a session generated from this truth.
    pub fn manifest(&self, profile: &MotionProfile) -> SessionManifest {
        SessionManifest {
            schema_version: SCHEMA_VERSION,
            subject: profile.subject.clone(),
            group: profile.group,
            timepoint: profile.timepoint,
            side: profile.side,
            sample_rate_hz: Some(profile.sample_rate),
            calibration: self.calibration,
            tasks: self.tasks.iter().map(|t| t.window).collect(),
            streams: self.segments.keys().map(|s| (*s, format!("{}.csv", s.name()))).collect(),
        }
    }
}

/// Standard normal deviates from a PCG32 stream.
pub struct NormalSource {
    rng: Pcg32,
}

impl NormalSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { rng: Pcg32::new(seed, stream) }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    fn vec3(&mut self, sigma: f64) -> Vec3 {
        let (x, y, z) = (self.normal(), self.normal(), self.normal());
        Vec3::new(x, y, z) * sigma
    }
}

/// IMU readings of a sensor following `series` exactly.
///
/// The gyro at sample `k` is the mean body rate over `(t[k-1], t[k]]`; sample
/// 0 repeats the first interval. `linear_accel` is the world-frame
/// acceleration of the sensor, if any.
pub fn imu_from_orientations(
    series: &OrientationSeries,
    linear_accel: Option<&[Vec3]>,
    noise: &NoiseProfile,
    normals: &mut NormalSource,
) -> Vec<ImuSample> {
    let s = &series.samples;
    let rate = |a: &OrientationSample, b: &OrientationSample| {
        (a.q.conjugate() * b.q).rotation_vector() * (1.0 / (b.t - a.t))
    };
    (0..s.len())
        .map(|k| {
            let gyro = match k {
                _ if s.len() < 2 => Vec3::ZERO,
                0 => rate(&s[0], &s[1]),
                _ => rate(&s[k - 1], &s[k]),
            };
            let q_inv = s[k].q.conjugate();
            let lin = linear_accel.map_or(Vec3::ZERO, |a| a[k]);
            let accel = q_inv.rotate(Vec3::Y * STANDARD_GRAVITY + lin);
            let mag = q_inv.rotate(Vec3::X);
            ImuSample {
                t: s[k].t,
                accel: accel + normals.vec3(noise.accel_sigma),
                gyro: gyro + noise.gyro_bias + normals.vec3(noise.gyro_sigma),
                mag: mag + normals.vec3(noise.mag_sigma),
            }
        })
        .collect()
}

/// World-frame acceleration of a point fixed at `arm` in the segment frame.
fn point_acceleration(series: &OrientationSeries, arm: Vec3) -> Vec<Vec3> {
    let s = &series.samples;
    let p: Vec<Vec3> = s.iter().map(|o| o.q.rotate(arm)).collect();
    (0..s.len())
        .map(|k| {
            if k == 0 || k + 1 >= s.len() {
                return Vec3::ZERO;
            }
            let (h0, h1) = (s[k].t - s[k - 1].t, s[k + 1].t - s[k].t);
            ((p[k + 1] - p[k]) * (1.0 / h1) - (p[k] - p[k - 1]) * (1.0 / h0)) * (2.0 / (h0 + h1))
        })
        .collect()
}

/// Sensor streams for every site of `truth`.
pub fn synthesize_imu(
    truth: &GroundTruth,
    profile: &MotionProfile,
) -> Result<BTreeMap<SensorSite, Vec<ImuSample>>, SynthError> {
    profile.validate()?;
    let mut out = BTreeMap::new();
    for (&site, seg) in &truth.segments {
        let mount = profile.mounting.get(&site).copied().unwrap_or(UnitQuaternion::IDENTITY);
        let sensor = OrientationSeries {
            samples: seg.samples.iter().map(|s| OrientationSample { t: s.t, q: s.q * mount }).collect(),
        };
        let arm = match (site, profile.lever_arm) {
            (SensorSite::Humerus, Some(l)) => Some(Vec3::new(0.0, -l, 0.0)),
            (SensorSite::Forearm, Some(l)) => Some(Vec3::new(0.0, -2.0 * l, 0.0)),
            _ => None,
        };
        let lin = arm.map(|a| point_acceleration(seg, a));
        let mut normals = NormalSource::new(profile.seed, site.ordinal());
        out.insert(site, imu_from_orientations(&sensor, lin.as_deref(), &profile.noise, &mut normals));
    }
    Ok(out)
}

/// The session a profile describes, streams included.
pub fn synthesize_session(profile: &MotionProfile) -> Result<(GroundTruth, SessionData), SynthError> {
    let truth = generate_truth(profile)?;
    let streams = synthesize_imu(&truth, profile)?;
    let manifest = truth.manifest(profile);
    Ok((truth, SessionData { manifest, streams }))
}

/// Parameter values the pipeline should recover from a synthetic session.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExpectedParameters {
    pub rom_e: Option<f64>,
    pub rom_a: Option<f64>,
    pub rom_s: Option<f64>,
    /// The scapula's programmed head start, `-scapula_lag`.
    pub onset_lead_kinematic: Option<f64>,
    /// Onset lead and activation times the detector finds on the exact
    /// (noise-free, error-free) joint angles.
    pub onset_lead: Option<f64>,
    pub act_time_scapula: Option<f64>,
    pub act_time_humerus: Option<f64>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl GroundTruth {
    pub fn expected(&self, seg: &SegmentConfig) -> Result<ExpectedParameters, SynthError> {
        let reps = |k: TaskKind| self.tasks.iter().filter(move |t| t.window.kind == k).flat_map(|t| t.reps.iter());
        let mut tasks = Vec::new();
        for t in self.tasks.iter().filter(|t| t.window.kind == TaskKind::Abduction) {
            let h = self.humerothoracic.window(t.window.start, t.window.end);
            let s = self.scapulothoracic.window(t.window.start, t.window.end);
            tasks.push(analyze_task(t.window.kind, &h, Some(&s), seg).map_err(SynthError::Reference)?);
        }
        let reference = crate::params::combine(&tasks);
        let has_abduction = reps(TaskKind::Abduction).next().is_some();
        Ok(ExpectedParameters {
            rom_e: mean(reps(TaskKind::Elevation).map(|r| r.rom)),
            rom_a: mean(reps(TaskKind::Abduction).map(|r| r.rom)),
            rom_s: mean(reps(TaskKind::Abduction).map(|r| r.rom_scapula)).filter(|_| has_abduction),
            onset_lead_kinematic: mean(reps(TaskKind::Abduction).map(|r| r.start - r.scapula_start)),
            onset_lead: reference.onset_lead_scapula,
            act_time_scapula: reference.act_time_scapula,
            act_time_humerus: reference.act_time_humerus,
        })
    }
}

/// Pass bounds per parameter family; `None` reports without gating.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    pub rom: Option<f64>,
    pub onset_lead: Option<f64>,
    pub activation: Option<f64>,
}

impl Tolerances {
    pub fn noise_free() -> Self {
        Self { rom: Some(1.0), onset_lead: Some(0.05), activation: Some(0.1) }
    }

    pub fn noisy() -> Self {
        Self { rom: Some(5.0), onset_lead: None, activation: None }
    }

    pub fn for_profile(profile: &MotionProfile) -> Self {
        if profile.noise.is_zero() && profile.lever_arm.is_none() {
            Self::noise_free()
        } else {
            Self::noisy()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonRow {
    pub parameter: String,
    pub truth: f64,
    pub measured: Option<f64>,
    pub abs_error: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub pass: bool,
}

impl Comparison {
    pub fn row(&self, parameter: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }
}

/// Absolute error of every parameter with a known truth.
pub fn compare(expected: &ExpectedParameters, measured: &SessionParameters, tol: &Tolerances) -> Comparison {
    let m = measured;
    let candidates = [
        ("rom_e", expected.rom_e, m.rom_e.as_ref().map(|r| r.mean), tol.rom),
        ("rom_a", expected.rom_a, m.rom_a.as_ref().map(|r| r.mean), tol.rom),
        ("rom_s", expected.rom_s, m.rom_s.as_ref().map(|r| r.mean), tol.rom),
        ("onset_lead_scapula", expected.onset_lead, m.onset_lead_scapula, tol.onset_lead),
        ("onset_lead_kinematic", expected.onset_lead_kinematic, m.onset_lead_scapula, tol.onset_lead),
        ("act_time_scapula", expected.act_time_scapula, m.act_time_scapula, tol.activation),
        ("act_time_humerus", expected.act_time_humerus, m.act_time_humerus, tol.activation),
    ];
    let rows: Vec<ComparisonRow> = candidates
        .into_iter()
        .filter_map(|(name, truth, measured, tolerance)| {
            let truth = truth?;
            let abs_error = measured.map(|x| (x - truth).abs());
            let pass = match (tolerance, abs_error) {
                (None, _) => true,
                (Some(t), Some(e)) => e < t,
                (Some(_), None) => false,
            };
            Some(ComparisonRow { parameter: name.to_string(), truth, measured, abs_error, tolerance, pass })
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Comparison { rows, pass }
}

/// Synthesizes, analyzes and compares without touching the filesystem.
pub fn round_trip_in_memory(
    profile: &MotionProfile,
    cfg: &AnalysisConfig,
) -> Result<(GroundTruth, SessionAnalysis, Comparison), SynthError> {
    let (truth, data) = synthesize_session(profile)?;
    let analysis = extract_session(&data, cfg)?;
    let expected = truth.expected(&cfg.segment)?;
    let cmp = compare(&expected, &analysis.parameters, &Tolerances::for_profile(profile));
    Ok((truth, analysis, cmp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{decompose_euler, EulerSequence};
    use alloc::vec;

    #[test]
    fn waveform_peak_and_share() {
        let p = MotionProfile {
            tasks: vec![MotionTask { n_reps: 1, peak: 90.0, period: 2.0, scapula_lag: 0.0, ..Default::default() }],
            ..Default::default()
        };
        let truth = generate_truth(&p).unwrap();
        let h = &truth.humerothoracic;
        let (k, max) = h.v.iter().enumerate().fold((0, 0.0), |a, (k, &v)| if v > a.1 { (k, v) } else { a });
        assert_eq!(max, 90.0);
        assert!((h.t[k] - (truth.tasks[0].reps[0].start + 1.0)).abs() < 1e-9);
        let smax = truth.scapulothoracic.v.iter().cloned().fold(0.0, f64::max);
        assert!((smax - 30.0).abs() < 1e-12);
    }

    #[test]
    fn lag_shifts_scapula_start() {
        let truth = generate_truth(&MotionProfile::default()).unwrap();
        for r in &truth.tasks[0].reps {
            assert!((r.start - r.scapula_start - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_reps_rejected() {
        let p = MotionProfile { tasks: vec![MotionTask { n_reps: 0, ..Default::default() }], ..Default::default() };
        assert!(matches!(generate_truth(&p), Err(SynthError::InvalidProfile(_))));
        let p = MotionProfile { tasks: vec![MotionTask { peak: 180.0, ..Default::default() }], ..Default::default() };
        assert!(matches!(generate_truth(&p), Err(SynthError::InvalidProfile(_))));
    }

    #[test]
    fn stationary_accel_reads_gravity_through_mount() {
        let p = MotionProfile::default();
        let truth = generate_truth(&p).unwrap();
        let imu = synthesize_imu(&truth, &p).unwrap();
        let mount = p.mounting[&SensorSite::Thorax];
        let expected = mount.conjugate().rotate(Vec3::new(0.0, STANDARD_GRAVITY, 0.0));
        for s in &imu[&SensorSite::Thorax] {
            assert!((s.accel - expected).norm() < 1e-12);
            assert!(s.gyro.norm() < 1e-12);
        }
    }

    #[test]
    fn constant_rate_gyro() {
        let rate = 30.0 * PI / 180.0;
        let series = OrientationSeries {
            samples: (0..300)
                .map(|k| {
                    let t = k as f64 / 100.0;
                    OrientationSample { t, q: UnitQuaternion::rot_y(rate * t) }
                })
                .collect(),
        };
        let imu = imu_from_orientations(&series, None, &NoiseProfile::none(), &mut NormalSource::new(0, 0));
        for s in &imu {
            assert!((s.gyro.norm() - rate).abs() < 1e-3);
        }
    }

    #[test]
    fn truth_angles_match_orientations() {
        for side in [Side::Right, Side::Left] {
            let p = MotionProfile {
                side,
                tasks: vec![
                    MotionTask { kind: TaskKind::Elevation, n_reps: 2, ..Default::default() },
                    MotionTask { n_reps: 2, ..Default::default() },
                ],
                ..Default::default()
            };
            let truth = generate_truth(&p).unwrap();
            let hum = &truth.segments[&SensorSite::Humerus].samples;
            let scap = &truth.segments[&SensorSite::Scapula].samples;
            for k in 0..hum.len() {
                let e = decompose_euler(hum[k].q, EulerSequence::Yxy);
                assert!((e.a2 - truth.humerothoracic.v[k]).abs() < 1e-9);
                let s = decompose_euler(scap[k].q, EulerSequence::Yxz);
                let sign = if side == Side::Left { -1.0 } else { 1.0 };
                assert!((sign * s.a2 - truth.scapulothoracic.v[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let p = MotionProfile { noise: NoiseProfile::biased(), seed: 42, ..Default::default() };
        let a = synthesize_session(&p).unwrap().1;
        let b = synthesize_session(&p).unwrap().1;
        assert_eq!(a, b);
        let c = synthesize_session(&MotionProfile { seed: 43, ..p }).unwrap().1;
        assert_ne!(a.streams, c.streams);
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut n = NormalSource::new(7, 3);
        let xs: Vec<f64> = (0..20000).map(|_| n.normal()).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 0.03 && (v - 1.0).abs() < 0.05);
    }
}
