//! Quaternion and rotation algebra.
//!
//! Conventions: Hamilton product, scalar-first storage, right-handed frames.
//! The world frame is X anterior, Y up, Z right. An orientation `q` maps
//! vectors expressed in the body frame into the world frame.

use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;


/// Row-major 3×3 matrix.
pub type Matrix3 = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero or non-finite vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unsigned angle between two vectors, radians.
    pub fn angle_to(self, other: Vec3) -> f64 {
        self.cross(other).norm().atan2(self.dot(other))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A rotation stored as a unit quaternion in canonical sign
/// (`w ≥ 0`; when `w == 0` the first nonzero vector component is positive).
///
/// Every constructor and operation renormalizes, so the norm stays within
/// floating-point rounding of one.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(into = "[f64; 4]", try_from = "[f64; 4]")
)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Returned when raw components cannot be normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroNorm;

impl fmt::Display for ZeroNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("quaternion has zero or non-finite norm")
    }
}

impl core::error::Error for ZeroNorm {}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes and canonicalizes raw components.
    pub fn from_components(w: f64, x: f64, y: f64, z: f64) -> Result<Self, ZeroNorm> {
        let n2 = w * w + x * x + y * y + z * z;
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(ZeroNorm);
        }
        // Already unit up to rounding: keep the bits so stored values round-trip.
        let inv = if (n2 - 1.0).abs() <= 4.0 * f64::EPSILON { 1.0 } else { 1.0 / n2.sqrt() };
        let (mut w, mut x, mut y, mut z) = (w * inv, x * inv, y * inv, z * inv);
        let flip = if w != 0.0 {
            w < 0.0
        } else if x != 0.0 {
            x < 0.0
        } else if y != 0.0 {
            y < 0.0
        } else {
            z < 0.0
        };
        if flip {
            w = -w;
            x = -x;
            y = -y;
            z = -z;
        }
        // `-0.0` would otherwise leak into serialized output.
        Ok(Self {
            w: w + 0.0,
            x: x + 0.0,
            y: y + 0.0,
            z: z + 0.0,
        })
    }

    /// Rotation by `angle` radians about `axis`. A zero axis yields the identity.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        match axis.normalized() {
            Some(u) if angle != 0.0 => {
                let (s, c) = (angle * 0.5).sin_cos();
                Self::from_components(c, u.x * s, u.y * s, u.z * s).unwrap_or(Self::IDENTITY)
            }
            _ => Self::IDENTITY,
        }
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::X, angle)
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::Y, angle)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(Vec3::Z, angle)
    }

    /// Strapdown increment: the rotation accumulated over `dt` seconds at the
    /// constant body rate `omega` (rad/s).
    pub fn exp_map(omega: Vec3, dt: f64) -> Self {
        let rate = omega.norm();
        if rate == 0.0 || dt == 0.0 {
            return Self::IDENTITY;
        }
        Self::from_axis_angle(omega, rate * dt)
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Inverse rotation.
    pub fn conjugate(self) -> Self {
        Self::from_components(self.w, -self.x, -self.y, -self.z).unwrap_or(Self::IDENTITY)
    }

    pub fn inverse(self) -> Self {
        self.conjugate()
    }

    /// Rotates `v` from the body frame into the reference frame.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = self.vector();
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(self) -> f64 {
        2.0 * self.vector().norm().atan2(self.w.abs())
    }

    /// Geodesic distance to `other`, radians in `[0, π]`.
    pub fn angle_to(self, other: Self) -> f64 {
        (self * other.conjugate()).angle()
    }

    /// Axis times angle, with the angle in `[0, π]`.
    pub fn rotation_vector(self) -> Vec3 {
        let s = self.vector().norm();
        if s == 0.0 {
            return Vec3::ZERO;
        }
        let angle = 2.0 * s.atan2(self.w);
        self.vector() * (angle / s)
    }

    pub fn to_rotation_matrix(self) -> Matrix3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// Shepperd's method; `m` must be a proper rotation matrix.
    pub fn from_rotation_matrix(m: &Matrix3) -> Self {
        let trace = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z) = if trace > m[0][0] && trace > m[1][1] && trace > m[2][2] {
            let s = (1.0 + trace).sqrt() * 2.0;
            (
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            (
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            (
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            (
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
            )
        };
        Self::from_components(w, x, y, z).unwrap_or(Self::IDENTITY)
    }

    /// Spherical linear interpolation along the shorter arc, `f ∈ [0, 1]`.
    pub fn slerp(self, other: Self, f: f64) -> Self {
        if f <= 0.0 {
            return self;
        }
        if f >= 1.0 {
            return other;
        }
        let mut b = other.to_array();
        let mut d = self.dot(other);
        if d < 0.0 {
            d = -d;
            b.iter_mut().for_each(|c| *c = -*c);
        }
        let a = self.to_array();
        let (ka, kb) = if d > 1.0 - 1e-12 {
            (1.0 - f, f)
        } else {
            let theta = d.min(1.0).acos();
            let s = theta.sin();
            (((1.0 - f) * theta).sin() / s, (f * theta).sin() / s)
        };
        Self::from_components(
            ka * a[0] + kb * b[0],
            ka * a[1] + kb * b[1],
            ka * a[2] + kb * b[2],
            ka * a[3] + kb * b[3],
        )
        .unwrap_or(self)
    }

    /// Normalized sign-aligned average; adequate for tightly clustered samples
    /// such as a static calibration window. `None` for an empty input.
    pub fn mean<I: IntoIterator<Item = UnitQuaternion>>(items: I) -> Option<Self> {
        let mut iter = items.into_iter();
        let first = iter.next()?;
        let mut acc = first.to_array();
        for q in iter {
            let sign = if q.dot(first) < 0.0 { -1.0 } else { 1.0 };
            let c = q.to_array();
            for k in 0..4 {
                acc[k] += sign * c[k];
            }
        }
        Self::from_components(acc[0], acc[1], acc[2], acc[3]).ok()
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Hamilton product `self ⊗ rhs`: apply `rhs` first, then `self`.
impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;
    fn mul(self, b: UnitQuaternion) -> UnitQuaternion {
        let a = self;
        Self::from_components(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
        .unwrap_or(Self::IDENTITY)
    }
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        q.to_array()
    }
}

impl TryFrom<[f64; 4]> for UnitQuaternion {
    type Error = ZeroNorm;
    fn try_from(c: [f64; 4]) -> Result<Self, ZeroNorm> {
        Self::from_components(c[0], c[1], c[2], c[3])
    }
}

/// Multiplies two row-major matrices.
pub fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(m: &Matrix3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// Intrinsic Euler sequences used for anatomical angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EulerSequence {
    /// Plane of elevation, elevation, axial rotation (humerothoracic).
    Yxy,
    /// Protraction, upward rotation, tilt (scapulothoracic).
    Yxz,
}

/// Half-width of the band around the singular middle angle where the first
/// angle is forced to zero, degrees.
pub const GIMBAL_BAND_DEG: f64 = 1.0;

/// Euler angles in degrees, `R = R_Y(a1) · R_X(a2) · R_{Y|Z}(a3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EulerAngles {
    pub sequence: EulerSequence,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Set inside the gimbal band, where `a1` is fixed at 0 and `a3` absorbs
    /// the residual.
    pub degenerate: bool,
}

impl EulerAngles {
    /// Rebuilds the rotation.
    pub fn compose(&self) -> UnitQuaternion {
        let first = UnitQuaternion::rot_y(self.a1.to_radians());
        let second = UnitQuaternion::rot_x(self.a2.to_radians());
        let third = match self.sequence {
            EulerSequence::Yxy => UnitQuaternion::rot_y(self.a3.to_radians()),
            EulerSequence::Yxz => UnitQuaternion::rot_z(self.a3.to_radians()),
        };
        first * second * third
    }
}

/// Decomposes `q` into the given intrinsic sequence.
///
/// YXY reports `a2 ∈ [0°, 180°]`; YXZ reports `a2 ∈ [-90°, 90°]`.
pub fn decompose_euler(q: UnitQuaternion, sequence: EulerSequence) -> EulerAngles {
    let m = q.to_rotation_matrix();
    let band = GIMBAL_BAND_DEG.to_radians();
    let (a1, a2, a3, degenerate) = match sequence {
        EulerSequence::Yxy => {
            // R11 = cos a2, (R01, R21) = sin a2 (sin a1, cos a1),
            // (R10, R12) = sin a2 (sin a3, -cos a3)
            let s2 = m[0][1].hypot(m[2][1]);
            let a2 = s2.atan2(m[1][1]);
            if a2 < band || a2 > core::f64::consts::PI - band {
                (0.0, a2, m[0][2].atan2(m[0][0]), true)
            } else {
                (m[0][1].atan2(m[2][1]), a2, m[1][0].atan2(-m[1][2]), false)
            }
        }
        EulerSequence::Yxz => {
            // R12 = -sin a2, (R02, R22) = cos a2 (sin a1, cos a1),
            // (R10, R11) = cos a2 (sin a3, cos a3)
            let c2 = m[0][2].hypot(m[2][2]);
            let a2 = (-m[1][2]).atan2(c2);
            if a2.abs() > core::f64::consts::FRAC_PI_2 - band {
                (0.0, a2, (-m[0][1]).atan2(m[0][0]), true)
            } else {
                (m[0][2].atan2(m[2][2]), a2, m[1][0].atan2(m[1][1]), false)
            }
        }
    };
    EulerAngles {
        sequence,
        a1: a1.to_degrees() + 0.0,
        a2: a2.to_degrees() + 0.0,
        a3: a3.to_degrees() + 0.0,
        degenerate,
    }
}
