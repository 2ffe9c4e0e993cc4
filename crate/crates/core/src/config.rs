//! Analysis configuration: every tunable of the pipeline in one versioned record.

use crate::anatomy::SensorSite;
use crate::fusion::FilterConfig;
use crate::segment::SegmentConfig;
use crate::session::SCHEMA_VERSION;
use crate::stats::cohort::{default_sd_policy, SdPolicy};
use crate::stats::Sidedness;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AnalysisConfig {
    pub schema_version: u32,
    pub fusion: FilterConfig,
    pub segment: SegmentConfig,
    /// Segment whose elevation gives ROME: the humerus, or the forearm when
    /// a wrist sensor is worn.
    pub elevation_reference: SensorSite,
    /// SD divisor per table id.
    pub sd_policy: SdPolicy,
    /// Sidedness shown first in reports; both are always computed.
    pub primary_sidedness: Sidedness,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            fusion: FilterConfig::default(),
            segment: SegmentConfig::default(),
            elevation_reference: SensorSite::Humerus,
            sd_policy: default_sd_policy(),
            primary_sidedness: Sidedness::Two,
        }
    }
}
