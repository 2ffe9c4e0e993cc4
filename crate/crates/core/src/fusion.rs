//! Per-sensor orientation estimation from 9-axis samples.
//!
//! A predictor-corrector complementary filter: the gyroscope is integrated
//! with the quaternion exponential map, then tilt is pulled toward the
//! accelerometer's gravity direction (only while the specific force is close
//! to 1 g) and heading toward the horizontal magnetometer direction.

use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;


use crate::geom::{UnitQuaternion, Vec3};
use crate::STANDARD_GRAVITY;

/// One timestamped 9-axis reading.
///
/// `accel` is specific force in the sensor frame (a sensor at rest reads
/// +1 g along world up), `gyro` is the body rate over the interval ending at
/// `t`, and `mag` is the field direction (unitless).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImuSample {
    pub t: f64,
    pub accel: Vec3,
    pub gyro: Vec3,
    pub mag: Vec3,
}

impl ImuSample {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.accel.is_finite() && self.gyro.is_finite() && self.mag.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrientationSample {
    pub t: f64,
    /// Sensor frame expressed in the world frame.
    pub q: UnitQuaternion,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrientationSeries {
    pub samples: Vec<OrientationSample>,
}

impl OrientationSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_time(&self) -> Option<f64> {
        self.samples.first().map(|s| s.t)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    /// Orientation at `t` by spherical interpolation between neighbouring
    /// samples; `None` outside the covered interval.
    pub fn interpolate(&self, t: f64) -> Option<UnitQuaternion> {
        let s = &self.samples;
        let (first, last) = (s.first()?, s.last()?);
        if t < first.t || t > last.t {
            return None;
        }
        let hi = s.partition_point(|p| p.t < t);
        if s[hi].t == t {
            return Some(s[hi].q);
        }
        let (a, b) = (&s[hi - 1], &s[hi]);
        Some(a.q.slerp(b.q, (t - a.t) / (b.t - a.t)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FilterConfig {
    /// Tilt correction time constant, s. `f64::INFINITY` disables it.
    pub accel_time_constant: f64,
    /// Heading correction time constant, s. `f64::INFINITY` disables it.
    pub mag_time_constant: f64,
    /// Accepted specific-force band, as fractions of standard gravity.
    pub accel_gate_low: f64,
    pub accel_gate_high: f64,
    /// Length of the leading window used to initialize, s.
    pub still_window: f64,
    /// Mean gyro magnitude above which the leading window is rejected, rad/s.
    pub still_gyro_limit: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            accel_time_constant: 2.0,
            mag_time_constant: 5.0,
            accel_gate_low: 0.9,
            accel_gate_high: 1.1,
            still_window: 0.5,
            still_gyro_limit: 0.05,
        }
    }
}

impl FilterConfig {
    /// Pure strapdown integration: no accelerometer or magnetometer correction.
    pub fn gyro_only() -> Self {
        Self {
            accel_time_constant: f64::INFINITY,
            mag_time_constant: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.accel_time_constant > 0.0) || !(self.mag_time_constant > 0.0) {
            return Err(FusionError::InvalidConfig("time constants must be positive"));
        }
        if !(self.accel_gate_low > 0.0 && self.accel_gate_low < self.accel_gate_high)
            || !self.accel_gate_high.is_finite()
        {
            return Err(FusionError::InvalidConfig("accel gate needs 0 < low < high"));
        }
        if !(self.still_window > 0.0 && self.still_window.is_finite()) {
            return Err(FusionError::InvalidConfig("still window must be positive"));
        }
        if !(self.still_gyro_limit > 0.0) {
            return Err(FusionError::InvalidConfig("stillness limit must be positive"));
        }
        Ok(())
    }
}

/// Minimum number of samples the initialization window must hold.
pub const MIN_STILL_SAMPLES: usize = 10;

/// Magnetometer directions closer than this to the gravity axis are rejected, degrees.
pub const MIN_FIELD_GRAVITY_ANGLE_DEG: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub enum FusionError {
    TooShort { len: usize, needed: usize },
    NonMonotoneTime { index: usize },
    NonFinite { index: usize },
    NotStill { mean_rate: f64 },
    DegenerateField { angle_deg: f64 },
    TimestampMismatch { index: usize },
    InvalidConfig(&'static str),
}

impl fmt::Display for FusionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionError::TooShort { len, needed } => {
                write!(f, "stream too short: {len} samples, need {needed}")
            }
            FusionError::NonMonotoneTime { index } => {
                write!(f, "timestamps not strictly increasing at sample {index}")
            }
            FusionError::NonFinite { index } => write!(f, "non-finite value at sample {index}"),
            FusionError::NotStill { mean_rate } => {
                write!(f, "initial window not still (mean gyro {mean_rate:.4} rad/s)")
            }
            FusionError::DegenerateField { angle_deg } => write!(
                f,
                "magnetic field within {angle_deg:.2} deg of gravity; heading undefined"
            ),
            FusionError::TimestampMismatch { index } => {
                write!(f, "series timestamps differ at sample {index}")
            }
            FusionError::InvalidConfig(msg) => write!(f, "invalid filter config: {msg}"),
        }
    }
}

impl core::error::Error for FusionError {}

/// Orientation from a still window: the mean specific force is mapped to
/// world +Y and the horizontal part of the mean field to world +X.
pub fn init_orientation(samples: &[ImuSample], still_gyro_limit: f64) -> Result<UnitQuaternion, FusionError> {
    if samples.len() < MIN_STILL_SAMPLES {
        return Err(FusionError::TooShort {
            len: samples.len(),
            needed: MIN_STILL_SAMPLES,
        });
    }
    let n = samples.len() as f64;
    let mean_rate = samples.iter().map(|s| s.gyro.norm()).sum::<f64>() / n;
    if !(mean_rate < still_gyro_limit) {
        return Err(FusionError::NotStill { mean_rate });
    }
    let accel = samples.iter().fold(Vec3::ZERO, |acc, s| acc + s.accel) * (1.0 / n);
    let mag = samples.iter().fold(Vec3::ZERO, |acc, s| acc + s.mag) * (1.0 / n);
    let up = accel
        .normalized()
        .ok_or(FusionError::DegenerateField { angle_deg: 0.0 })?;
    let angle = mag.angle_to(up).to_degrees();
    if !(MIN_FIELD_GRAVITY_ANGLE_DEG..=180.0 - MIN_FIELD_GRAVITY_ANGLE_DEG).contains(&angle) {
        return Err(FusionError::DegenerateField { angle_deg: angle.min(180.0 - angle) });
    }
    let north = (mag - up * mag.dot(up))
        .normalized()
        .ok_or(FusionError::DegenerateField { angle_deg: 0.0 })?;
    let east = north.cross(up);
    // rows are the body-frame images of the world axes
    let m = [north.to_array(), up.to_array(), east.to_array()];
    Ok(UnitQuaternion::from_rotation_matrix(&m))
}

fn validate_stream(stream: &[ImuSample]) -> Result<(), FusionError> {
    if stream.len() < 2 {
        return Err(FusionError::TooShort { len: stream.len(), needed: 2 });
    }
    for (i, s) in stream.iter().enumerate() {
        if !s.is_finite() {
            return Err(FusionError::NonFinite { index: i });
        }
        if i > 0 && !(s.t > stream[i - 1].t) {
            return Err(FusionError::NonMonotoneTime { index: i });
        }
    }
    Ok(())
}

/// Complementary filter state for one stream.
#[derive(Clone, Debug)]
pub struct ComplementaryFilter {
    cfg: FilterConfig,
    q: UnitQuaternion,
    last_t: f64,
}

impl ComplementaryFilter {
    pub fn new(cfg: FilterConfig, initial: UnitQuaternion, t0: f64) -> Self {
        Self { cfg, q: initial, last_t: t0 }
    }

    pub fn orientation(&self) -> UnitQuaternion {
        self.q
    }

    /// Advances to `sample.t` and returns the corrected orientation.
    pub fn update(&mut self, sample: &ImuSample) -> UnitQuaternion {
        let dt = sample.t - self.last_t;
        self.last_t = sample.t;
        self.q = self.q * UnitQuaternion::exp_map(sample.gyro, dt);

        let w_tilt = (dt / self.cfg.accel_time_constant).min(1.0);
        let g = sample.accel.norm();
        if w_tilt > 0.0
            && g >= self.cfg.accel_gate_low * STANDARD_GRAVITY
            && g <= self.cfg.accel_gate_high * STANDARD_GRAVITY
        {
            let up = self.q.rotate(sample.accel * (1.0 / g));
            let axis = up.cross(Vec3::Y);
            let err = axis.norm().atan2(up.dot(Vec3::Y));
            if err > 0.0 {
                self.q = UnitQuaternion::from_axis_angle(axis, w_tilt * err) * self.q;
            }
        }

        let w_head = (dt / self.cfg.mag_time_constant).min(1.0);
        if w_head > 0.0 {
            let m = self.q.rotate(sample.mag);
            if m.x.hypot(m.z) > 1e-9 {
                let err = m.z.atan2(m.x);
                self.q = UnitQuaternion::rot_y(w_head * err) * self.q;
            }
        }
        self.q
    }
}

/// Runs the filter over a whole stream, one orientation per input sample.
pub fn estimate(stream: &[ImuSample], cfg: &FilterConfig) -> Result<OrientationSeries, FusionError> {
    cfg.validate()?;
    validate_stream(stream)?;
    let t0 = stream[0].t;
    let window_len = stream
        .iter()
        .take_while(|s| s.t - t0 <= cfg.still_window + 1e-9)
        .count();
    let q0 = init_orientation(&stream[..window_len], cfg.still_gyro_limit)?;

    let mut filter = ComplementaryFilter::new(*cfg, q0, t0);
    let mut samples = Vec::with_capacity(stream.len());
    samples.push(OrientationSample { t: t0, q: q0 });
    for s in &stream[1..] {
        let q = filter.update(s);
        samples.push(OrientationSample { t: s.t, q });
    }
    Ok(OrientationSeries { samples })
}

/// Per-sample geodesic angle between two series, degrees in `[0, 180]`.
pub fn attitude_error(a: &OrientationSeries, b: &OrientationSeries) -> Result<Vec<f64>, FusionError> {
    if a.len() != b.len() {
        return Err(FusionError::TimestampMismatch { index: a.len().min(b.len()) });
    }
    a.samples
        .iter()
        .zip(&b.samples)
        .enumerate()
        .map(|(i, (p, q))| {
            if p.t != q.t {
                Err(FusionError::TimestampMismatch { index: i })
            } else {
                Ok(p.q.angle_to(q.q).to_degrees())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    const G: f64 = STANDARD_GRAVITY;

    fn still(t: f64, accel: Vec3, mag: Vec3) -> ImuSample {
        ImuSample { t, accel, gyro: Vec3::ZERO, mag }
    }

    fn static_stream(q: UnitQuaternion, secs: f64, rate: f64) -> Vec<ImuSample> {
        let inv = q.conjugate();
        let n = (secs * rate) as usize + 1;
        (0..n)
            .map(|i| still(i as f64 / rate, inv.rotate(Vec3::Y * G), inv.rotate(Vec3::X)))
            .collect()
    }

    #[test]
    fn reference_pose_initializes_to_identity() {
        let w: Vec<_> = (0..20).map(|i| still(i as f64 * 0.01, Vec3::Y * G, Vec3::X)).collect();
        let q = init_orientation(&w, 0.05).unwrap();
        assert!(q.angle_to(UnitQuaternion::IDENTITY) < 1e-12);
    }

    #[test]
    fn tilted_sensor_rotates_gravity_back_up() {
        let w: Vec<_> = (0..20)
            .map(|i| still(i as f64 * 0.01, Vec3::X * G, Vec3::new(0.0, 0.0, 1.0)))
            .collect();
        let q = init_orientation(&w, 0.05).unwrap();
        let up = q.rotate(Vec3::X * G);
        assert!((up - Vec3::Y * G).norm() < 1e-6);
        assert!(q.rotate(Vec3::Z).x > 1.0 - 1e-9);
        assert!((q.angle().to_degrees() - 120.0).abs() < 1e-9);
    }

    #[test]
    fn field_near_gravity_is_degenerate() {
        let mag = UnitQuaternion::rot_z(3f64.to_radians()).rotate(Vec3::Y);
        let w: Vec<_> = (0..20).map(|i| still(i as f64 * 0.01, Vec3::Y * G, mag)).collect();
        assert!(matches!(init_orientation(&w, 0.05), Err(FusionError::DegenerateField { .. })));
    }

    #[test]
    fn moving_window_is_rejected() {
        let w: Vec<_> = (0..20)
            .map(|i| ImuSample { gyro: Vec3::new(0.0, 0.3, 0.0), ..still(i as f64 * 0.01, Vec3::Y * G, Vec3::X) })
            .collect();
        assert!(matches!(init_orientation(&w, 0.05), Err(FusionError::NotStill { .. })));
    }

    #[test]
    fn static_stream_stays_put() {
        let q = UnitQuaternion::rot_x(0.4) * UnitQuaternion::rot_y(1.2);
        let out = estimate(&static_stream(q, 10.0, 100.0), &FilterConfig::default()).unwrap();
        assert_eq!(out.len(), 1001);
        let first = out.samples[0].q;
        let last = out.samples.last().unwrap().q;
        assert!(first.angle_to(q).to_degrees() < 1e-9);
        assert!(last.angle_to(first).to_degrees() < 0.5);
    }

    #[test]
    fn constant_rate_turn_about_up() {
        // 30 deg/s for 3 s, with accel/mag consistent with the true pose
        let rate = 100.0;
        let omega = core::f64::consts::FRAC_PI_6;
        let mut stream = Vec::new();
        for i in 0..=400 {
            let t = i as f64 / rate;
            let angle = if t <= 0.5 { 0.0 } else { (omega * (t - 0.5)).min(omega * 3.0) };
            let moving = t > 0.5 && t <= 3.5 + 1e-9;
            let q = UnitQuaternion::rot_y(angle);
            let inv = q.conjugate();
            stream.push(ImuSample {
                t,
                accel: inv.rotate(Vec3::Y * G),
                gyro: if moving { Vec3::new(0.0, omega, 0.0) } else { Vec3::ZERO },
                mag: inv.rotate(Vec3::X),
            });
        }
        let out = estimate(&stream, &FilterConfig::default()).unwrap();
        let end = out.samples.last().unwrap().q;
        let turned = end.angle().to_degrees();
        assert!((turned - 90.0).abs() < 1.0, "turned {turned}");
        assert!(end.angle_to(UnitQuaternion::rot_y(omega * 3.0)).to_degrees() < 1.0);
        assert!((omega * 3.0 - FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_streams() {
        let mut s = static_stream(UnitQuaternion::IDENTITY, 1.0, 100.0);
        assert!(matches!(estimate(&s[..1], &FilterConfig::default()), Err(FusionError::TooShort { .. })));
        s[5].t = s[4].t;
        assert_eq!(
            estimate(&s, &FilterConfig::default()),
            Err(FusionError::NonMonotoneTime { index: 5 })
        );
    }

    #[test]
    fn attitude_error_fixed_offset() {
        let a = OrientationSeries {
            samples: (0..50)
                .map(|i| OrientationSample {
                    t: i as f64,
                    q: UnitQuaternion::rot_x(i as f64 * 0.05) * UnitQuaternion::rot_y(0.3),
                })
                .collect(),
        };
        assert!(attitude_error(&a, &a).unwrap().iter().all(|&e| e < 1e-12));
        let tilt = UnitQuaternion::rot_z(10f64.to_radians());
        let b = OrientationSeries {
            samples: a.samples.iter().map(|s| OrientationSample { t: s.t, q: tilt * s.q }).collect(),
        };
        for e in attitude_error(&a, &b).unwrap() {
            assert!((e - 10.0).abs() < 1e-9);
        }
        let mut c = b.clone();
        c.samples[3].t += 0.5;
        assert_eq!(attitude_error(&a, &c), Err(FusionError::TimestampMismatch { index: 3 }));
    }

    #[test]
    fn interpolate_between_samples() {
        let s = OrientationSeries {
            samples: alloc::vec![
                OrientationSample { t: 0.0, q: UnitQuaternion::IDENTITY },
                OrientationSample { t: 1.0, q: UnitQuaternion::rot_z(1.0) },
            ],
        };
        let mid = s.interpolate(0.25).unwrap();
        assert!(mid.angle_to(UnitQuaternion::rot_z(0.25)) < 1e-12);
        assert!(s.interpolate(1.5).is_none());
        assert_eq!(s.interpolate(1.0), Some(UnitQuaternion::rot_z(1.0)));
    }
}
