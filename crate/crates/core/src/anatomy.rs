//! Sensor-to-segment calibration and joint angles.
//!
//! In the calibration posture (upright, arm at the side, elbow flexed 90°)
//! every segment's anatomical frame is taken to coincide with the world
//! frame, so the mean sensor orientation over the window is exactly the
//! mounting offset. Joint angles are the decomposition of the distal segment
//! relative to the proximal one.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::fusion::{OrientationSample, OrientationSeries};
use crate::geom::{decompose_euler, EulerAngles, EulerSequence, UnitQuaternion};
use crate::segment::Trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SensorSite {
    Thorax,
    Scapula,
    Humerus,
    Forearm,
}

impl SensorSite {
    pub const ALL: [SensorSite; 4] = [
        SensorSite::Thorax,
        SensorSite::Scapula,
        SensorSite::Humerus,
        SensorSite::Forearm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorSite::Thorax => "thorax",
            SensorSite::Scapula => "scapula",
            SensorSite::Humerus => "humerus",
            SensorSite::Forearm => "forearm",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Offset of the site's noise stream in the synthetic generator.
    pub(crate) fn ordinal(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for SensorSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Joint {
    Humerothoracic,
    Scapulothoracic,
    ForearmThoracic,
}

impl Joint {
    pub fn proximal(self) -> SensorSite {
        SensorSite::Thorax
    }

    pub fn distal(self) -> SensorSite {
        match self {
            Joint::Humerothoracic => SensorSite::Humerus,
            Joint::Scapulothoracic => SensorSite::Scapula,
            Joint::ForearmThoracic => SensorSite::Forearm,
        }
    }

    pub fn sequence(self) -> EulerSequence {
        match self {
            Joint::Scapulothoracic => EulerSequence::Yxz,
            Joint::Humerothoracic | Joint::ForearmThoracic => EulerSequence::Yxy,
        }
    }
}

/// Minimum calibration window length, s.
pub const MIN_CALIBRATION_WINDOW: f64 = 1.0;
/// Mean angular speed above which a calibration window is rejected, rad/s.
pub const STILLNESS_LIMIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SiteCalibration {
    /// Sensor-to-segment offset: segment orientation = sensor orientation ⊗ offset.
    pub offset: UnitQuaternion,
    /// Mean angular speed over the window, rad/s.
    pub residual_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationResult {
    pub window: (f64, f64),
    pub sites: BTreeMap<SensorSite, SiteCalibration>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CalibrationError {
    WindowTooShort { length: f64 },
    NotStill { site: SensorSite, mean_rate: f64 },
    MissingSite(SensorSite),
    NotCovered(SensorSite),
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::WindowTooShort { length } => write!(
                f,
                "calibration window {length:.3} s is shorter than {MIN_CALIBRATION_WINDOW} s"
            ),
            CalibrationError::NotStill { site, mean_rate } => {
                write!(f, "{site} moves during calibration ({mean_rate:.4} rad/s)")
            }
            CalibrationError::MissingSite(site) => write!(f, "no {site} stream"),
            CalibrationError::NotCovered(site) => {
                write!(f, "{site} stream does not cover the calibration window")
            }
        }
    }
}

impl core::error::Error for CalibrationError {}

#[derive(Clone, Debug, PartialEq)]
pub enum AngleError {
    MissingCalibration(SensorSite),
    MissingSeries(SensorSite),
    NoOverlap,
}

impl fmt::Display for AngleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleError::MissingCalibration(site) => write!(f, "{site} is not calibrated"),
            AngleError::MissingSeries(site) => write!(f, "no {site} orientation series"),
            AngleError::NoOverlap => f.write_str("segment series do not overlap in time"),
        }
    }
}

impl core::error::Error for AngleError {}

/// Calibrates every site in `orientations` over `window`.
///
/// The thorax is required because every joint is referenced to it.
pub fn calibrate(
    orientations: &BTreeMap<SensorSite, OrientationSeries>,
    window: (f64, f64),
) -> Result<CalibrationResult, CalibrationError> {
    let (t0, t1) = window;
    let length = t1 - t0;
    if !(length >= MIN_CALIBRATION_WINDOW) {
        return Err(CalibrationError::WindowTooShort { length });
    }
    if !orientations.contains_key(&SensorSite::Thorax) {
        return Err(CalibrationError::MissingSite(SensorSite::Thorax));
    }
    let mut sites = BTreeMap::new();
    for (&site, series) in orientations {
        let (first, last) = match (series.first_time(), series.last_time()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(CalibrationError::NotCovered(site)),
        };
        if first > t0 || last < t1 {
            return Err(CalibrationError::NotCovered(site));
        }
        let inside: Vec<&OrientationSample> =
            series.samples.iter().filter(|s| s.t >= t0 && s.t <= t1).collect();
        if inside.len() < 2 {
            return Err(CalibrationError::NotCovered(site));
        }
        let residual_rate = inside
            .windows(2)
            .map(|p| p[0].q.angle_to(p[1].q) / (p[1].t - p[0].t))
            .sum::<f64>()
            / (inside.len() - 1) as f64;
        if !(residual_rate < STILLNESS_LIMIT) {
            return Err(CalibrationError::NotStill { site, mean_rate: residual_rate });
        }
        let mean = UnitQuaternion::mean(inside.iter().map(|s| s.q))
            .ok_or(CalibrationError::NotCovered(site))?;
        // anatomical pose is world-aligned: q_anat = identity
        let offset = mean.conjugate() * anatomical_pose(site);
        sites.insert(site, SiteCalibration { offset, residual_rate });
    }
    Ok(CalibrationResult { window, sites })
}

/// Orientation of each segment's anatomical frame in the calibration posture.
pub fn anatomical_pose(_site: SensorSite) -> UnitQuaternion {
    UnitQuaternion::IDENTITY
}

/// Applies a site's calibration offset to every sample.
pub fn segment_orientation(series: &OrientationSeries, cal: &SiteCalibration) -> OrientationSeries {
    OrientationSeries {
        samples: series
            .samples
            .iter()
            .map(|s| OrientationSample { t: s.t, q: s.q * cal.offset })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointAngleSample {
    pub t: f64,
    pub angles: EulerAngles,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointAngleSeries {
    pub joint: Joint,
    pub samples: Vec<JointAngleSample>,
}

/// Which Euler angle to pull out of a joint series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleComponent {
    First,
    Second,
    Third,
}

impl JointAngleSeries {
    /// Elevation for YXY joints, upward rotation for the scapula.
    pub fn primary(&self) -> Trace {
        self.component(AngleComponent::Second)
    }

    pub fn component(&self, which: AngleComponent) -> Trace {
        let mut t = Vec::with_capacity(self.samples.len());
        let mut v = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            t.push(s.t);
            v.push(match which {
                AngleComponent::First => s.angles.a1,
                AngleComponent::Second => s.angles.a2,
                AngleComponent::Third => s.angles.a3,
            });
        }
        Trace { t, v }
    }
}

/// Joint angles of `joint` on the proximal sensor's timeline.
///
/// The distal stream is resampled by spherical interpolation; proximal
/// samples outside the distal stream's extent are dropped.
pub fn joint_angles(
    orientations: &BTreeMap<SensorSite, OrientationSeries>,
    cal: &CalibrationResult,
    joint: Joint,
) -> Result<JointAngleSeries, AngleError> {
    let (p_site, d_site) = (joint.proximal(), joint.distal());
    let prox = orientations.get(&p_site).ok_or(AngleError::MissingSeries(p_site))?;
    let dist = orientations.get(&d_site).ok_or(AngleError::MissingSeries(d_site))?;
    let p_cal = cal.sites.get(&p_site).ok_or(AngleError::MissingCalibration(p_site))?;
    let d_cal = cal.sites.get(&d_site).ok_or(AngleError::MissingCalibration(d_site))?;

    let sequence = joint.sequence();
    let samples: Vec<JointAngleSample> = prox
        .samples
        .iter()
        .filter_map(|p| {
            let qd = dist.interpolate(p.t)?;
            let rel = (p.q * p_cal.offset).conjugate() * (qd * d_cal.offset);
            Some(JointAngleSample { t: p.t, angles: decompose_euler(rel, sequence) })
        })
        .collect();
    if samples.is_empty() {
        return Err(AngleError::NoOverlap);
    }
    Ok(JointAngleSeries { joint, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use alloc::vec;

    fn series<F: Fn(f64) -> UnitQuaternion>(secs: f64, f: F) -> OrientationSeries {
        let n = (secs * 100.0) as usize + 1;
        OrientationSeries {
            samples: (0..n)
                .map(|i| {
                    let t = i as f64 / 100.0;
                    OrientationSample { t, q: f(t) }
                })
                .collect(),
        }
    }

    fn elevation_at(t: f64) -> f64 {
        if t < 2.0 {
            0.0
        } else {
            ((t - 2.0) * 30.0).min(90.0).to_radians()
        }
    }

    #[test]
    fn aligned_sensor_gives_identity_offset() {
        let mut m = BTreeMap::new();
        m.insert(SensorSite::Thorax, series(3.0, |_| UnitQuaternion::IDENTITY));
        let cal = calibrate(&m, (0.5, 1.5)).unwrap();
        assert_eq!(cal.sites[&SensorSite::Thorax].offset, UnitQuaternion::IDENTITY);
        assert_eq!(cal.sites[&SensorSite::Thorax].residual_rate, 0.0);
    }

    #[test]
    fn mounting_offset_is_removed() {
        let mount = UnitQuaternion::rot_y(30f64.to_radians());
        let mut m = BTreeMap::new();
        m.insert(SensorSite::Thorax, series(6.0, |_| UnitQuaternion::IDENTITY));
        m.insert(
            SensorSite::Humerus,
            series(6.0, |t| UnitQuaternion::rot_x(elevation_at(t)) * mount),
        );
        let cal = calibrate(&m, (0.2, 1.8)).unwrap();
        let off = cal.sites[&SensorSite::Humerus].offset;
        assert!(off.angle_to(UnitQuaternion::rot_y(-30f64.to_radians())) < 1e-12);
        let seg = segment_orientation(&m[&SensorSite::Humerus], &cal.sites[&SensorSite::Humerus]);
        for s in &seg.samples {
            let truth = UnitQuaternion::rot_x(elevation_at(s.t));
            assert!(s.q.angle_to(truth).to_degrees() < 0.5);
        }
        let angles = joint_angles(&m, &cal, Joint::Humerothoracic).unwrap();
        let peak = angles.primary().v.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 90.0).abs() < 0.5);
    }

    #[test]
    fn calibration_is_idempotent() {
        let mut m = BTreeMap::new();
        m.insert(SensorSite::Thorax, series(3.0, |t| UnitQuaternion::rot_z(0.001 * t)));
        let a = calibrate(&m, (0.0, 2.0)).unwrap();
        let b = calibrate(&m, (0.0, 2.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_errors() {
        let mut m = BTreeMap::new();
        m.insert(SensorSite::Humerus, series(3.0, |_| UnitQuaternion::IDENTITY));
        assert_eq!(
            calibrate(&m, (0.0, 2.0)),
            Err(CalibrationError::MissingSite(SensorSite::Thorax))
        );
        m.insert(SensorSite::Thorax, series(3.0, |t| UnitQuaternion::rot_z(0.5 * t)));
        assert!(matches!(
            calibrate(&m, (0.0, 2.0)),
            Err(CalibrationError::NotStill { site: SensorSite::Thorax, .. })
        ));
        assert!(matches!(
            calibrate(&m, (0.0, 0.5)),
            Err(CalibrationError::WindowTooShort { .. })
        ));
        assert_eq!(
            calibrate(&m, (1.0, 5.0)),
            Err(CalibrationError::NotCovered(SensorSite::Thorax))
        );
    }

    #[test]
    fn equal_segments_give_zero_angles() {
        let f = |t: f64| UnitQuaternion::rot_x(t) * UnitQuaternion::rot_y(0.3 * t);
        let mut m = BTreeMap::new();
        m.insert(SensorSite::Thorax, series(4.0, f));
        m.insert(SensorSite::Scapula, series(4.0, f));
        let cal = CalibrationResult {
            window: (0.0, 1.0),
            sites: [SensorSite::Thorax, SensorSite::Scapula]
                .into_iter()
                .map(|s| (s, SiteCalibration { offset: UnitQuaternion::IDENTITY, residual_rate: 0.0 }))
                .collect(),
        };
        let a = joint_angles(&m, &cal, Joint::Scapulothoracic).unwrap();
        for s in &a.samples {
            assert!(s.angles.a1.abs() < 1e-9 && s.angles.a2.abs() < 1e-9 && s.angles.a3.abs() < 1e-9);
        }
    }

    #[test]
    fn thorax_motion_cancels() {
        let hum = |t: f64| UnitQuaternion::rot_y(0.2) * UnitQuaternion::rot_x(elevation_at(t));
        let trunk = |t: f64| UnitQuaternion::from_axis_angle(Vec3::new(1.0, 2.0, -0.5), 0.3 * t);
        let ident = |s| (s, SiteCalibration { offset: UnitQuaternion::IDENTITY, residual_rate: 0.0 });
        let cal = CalibrationResult {
            window: (0.0, 1.0),
            sites: [SensorSite::Thorax, SensorSite::Humerus].into_iter().map(ident).collect(),
        };
        let mut fixed = BTreeMap::new();
        fixed.insert(SensorSite::Thorax, series(5.0, |_| UnitQuaternion::IDENTITY));
        fixed.insert(SensorSite::Humerus, series(5.0, hum));
        let mut moving = BTreeMap::new();
        moving.insert(SensorSite::Thorax, series(5.0, trunk));
        moving.insert(SensorSite::Humerus, series(5.0, |t| trunk(t) * hum(t)));
        let a = joint_angles(&fixed, &cal, Joint::Humerothoracic).unwrap().primary();
        let b = joint_angles(&moving, &cal, Joint::Humerothoracic).unwrap().primary();
        for (x, y) in a.v.iter().zip(&b.v) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn disjoint_streams_do_not_overlap() {
        let mut m = BTreeMap::new();
        m.insert(SensorSite::Thorax, series(1.0, |_| UnitQuaternion::IDENTITY));
        let mut late = series(1.0, |_| UnitQuaternion::IDENTITY);
        late.samples.iter_mut().for_each(|s| s.t += 10.0);
        m.insert(SensorSite::Humerus, late);
        let ident = |s| (s, SiteCalibration { offset: UnitQuaternion::IDENTITY, residual_rate: 0.0 });
        let cal = CalibrationResult {
            window: (0.0, 1.0),
            sites: vec![SensorSite::Thorax, SensorSite::Humerus].into_iter().map(ident).collect(),
        };
        assert_eq!(joint_angles(&m, &cal, Joint::Humerothoracic), Err(AngleError::NoOverlap));
        let mut partial = cal.clone();
        partial.sites.remove(&SensorSite::Humerus);
        assert_eq!(
            joint_angles(&m, &partial, Joint::Humerothoracic),
            Err(AngleError::MissingCalibration(SensorSite::Humerus))
        );
    }
}
