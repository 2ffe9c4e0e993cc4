//! Files, reports and the command-line front end around `shoulder-core`.
//!
//! * [`sessionio`]: sensor CSV streams, TOML manifests, configs and profiles,
//!   JSON reports, markdown tables and SVG trace plots.
//! * [`fixture`]: the published reference cohort.
//! * [`roundtrip`]: synthesize, write, read back, analyze and compare.
//! * [`cli`]: the `shoulder` binary.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod fixture;
pub mod roundtrip;
pub mod sessionio;

use shoulder_core::synth::SynthError;
use shoulder_core::{PipelineError, Stage};

pub use sessionio::IoError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl Error {
    pub fn stage(&self) -> Stage {
        match self {
            Error::Io(e) => e.stage(),
            Error::Pipeline(e) => e.stage,
            Error::Synth(SynthError::InvalidProfile(_)) => Stage::Io,
            Error::Synth(SynthError::Reference(_)) => Stage::Params,
            Error::Synth(SynthError::Pipeline(e)) => e.stage,
        }
    }

    /// One line, always starting with the stage in brackets.
    pub fn diagnostic(&self) -> String {
        match self {
            Error::Pipeline(e) | Error::Synth(SynthError::Pipeline(e)) => e.to_string(),
            other => format!("[{}] {other}", other.stage()),
        }
        .replace('\n', " ")
    }
}
