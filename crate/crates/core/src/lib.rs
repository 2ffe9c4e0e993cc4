//! Shoulder kinematics from body-worn inertial sensors.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numeric
//! pipeline:
//!
//! * [`geom`]: unit quaternions, rotation of vectors, Euler decompositions.
//! * [`fusion`]: complementary-filter orientation estimation from 9-axis samples.
//! * [`anatomy`]: sensor-to-segment calibration and joint angles.
//! * [`segment`]: smoothing, repetition detection and onset detection.
//! * [`params`]: per-session range of motion, activation times and rhythm.
//! * [`stats`]: descriptive statistics, exact Mann-Whitney and Wilcoxon tests,
//!   cohort tables.
//! * [`synth`]: forward-kinematics session generator used as a ground-truth oracle.
//!
//! File formats, reports and the command-line front end live in the
//! `shoulder-kit` crate.
#![no_std]
// `!(a < b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod anatomy;
pub mod config;
pub mod error;
pub mod fusion;
pub mod geom;
pub mod params;
pub mod segment;
pub mod session;
pub mod stats;
pub mod synth;

pub use anatomy::{CalibrationResult, Joint, JointAngleSeries, SensorSite};
pub use config::AnalysisConfig;
pub use error::{PipelineError, Stage};
pub use fusion::{FilterConfig, ImuSample, OrientationSeries};
pub use geom::{EulerAngles, EulerSequence, UnitQuaternion, Vec3};
pub use params::SessionParameters;
pub use segment::{Repetition, Trace};
pub use session::{SessionData, SessionManifest};
pub use stats::TestResult;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;
