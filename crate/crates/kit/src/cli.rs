//! The `shoulder` command line.
//!
//! Exit status: 0 success, 1 usage error, 2 data or validation error,
//! 3 tolerance failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use shoulder_core::params::extract_session;
use shoulder_core::stats::cohort::Cohort;
use shoulder_core::synth::synthesize_session;

use crate::sessionio::report::{
    cohort_from_reports, read_cohort_report, to_json, write_json, SessionReport, REPORT_SCHEMA,
};
use crate::sessionio::{config_hash, markdown, plot, read_config, read_profile, read_session, write_atomic, write_session, IoError};
use crate::{fixture, roundtrip, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "shoulder", about = "Shoulder kinematics from body-worn inertial sensors", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic session from a motion profile.
    Simulate {
        /// Motion profile (TOML); the built-in abduction profile when omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Session directory to create.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the profile seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the expected parameters as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Config used for the expected parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Extract the clinical parameters of one session.
    Analyze {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Session report (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Angle traces with repetition boundaries (SVG).
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Collect session reports into cohort tables and run the comparisons.
    Cohort {
        /// Glob matching session report files.
        #[arg(long)]
        reports: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Cohorts that must contain at least one subject, e.g. AC-T0,HC.
        #[arg(long, value_delimiter = ',', value_parser = parse_cohort)]
        require: Vec<Cohort>,
    },
    /// Render cohort tables from a cohort report or the reference fixture.
    Tables {
        /// Cohort report (JSON) or reference cohort fixture (TOML).
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize, write, read back, analyze and compare with the truth.
    Roundtrip {
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Full comparison (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Md,
    Json,
}

fn parse_cohort(s: &str) -> Result<Cohort, String> {
    [Cohort::AcT0, Cohort::AcT1, Cohort::Hc]
        .into_iter()
        .find(|c| c.label().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| format!("unknown cohort `{s}` (expected AC-T0, AC-T1 or HC)"))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(IoError::Io { path: path.display().to_string(), source: e })
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "shoulder: {}", e.diagnostic());
            EXIT_DATA
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32, Error> {
    match command {
        Command::Simulate { profile, out, seed, truth, config } => {
            let mut profile = read_profile(profile.as_deref())?;
            if let Some(s) = seed {
                profile.seed = s;
            }
            let cfg = read_config(config.as_deref())?;
            let (gt, data) = synthesize_session(&profile)?;
            write_session(&data, &out)?;
            if let Some(path) = truth {
                write_json(&path, &gt.expected(&cfg.segment)?)?;
            }
            Ok(EXIT_OK)
        }
        Command::Analyze { session, config, out, plot: svg } => {
            let cfg = read_config(config.as_deref())?;
            let data = read_session(&session)?;
            let analysis = extract_session(&data, &cfg)?;
            let m = &data.manifest;
            let report = SessionReport {
                schema_version: REPORT_SCHEMA,
                subject: m.subject.clone(),
                group: m.group,
                timepoint: m.timepoint,
                side: m.side,
                session: session.display().to_string(),
                config_hash: config_hash(&cfg),
                parameters: analysis.parameters.clone(),
            };
            write_json(&out, &report)?;
            if let Some(path) = svg {
                let title = format!("subject {}", m.subject);
                write_atomic(&path, plot::render_svg(&analysis, &title).as_bytes())?;
            }
            Ok(EXIT_OK)
        }
        Command::Cohort { reports, config, out, require } => {
            let cfg = read_config(config.as_deref())?;
            let bad_glob = |message: String| {
                Error::Io(IoError::Validation { path: reports.clone(), line: None, invariant: message })
            };
            let mut paths = Vec::new();
            for entry in glob::glob(&reports).map_err(|e| bad_glob(format!("bad pattern: {e}")))? {
                let p = entry.map_err(|e| io_err(e.path(), std::io::Error::other(e.to_string())))?;
                if p.is_file() {
                    paths.push(p);
                }
            }
            if paths.is_empty() {
                return Err(bad_glob("no report files match".into()));
            }
            paths.sort();
            let report = cohort_from_reports(&paths, &require, &cfg)?;
            write_json(&out, &report)?;
            Ok(EXIT_OK)
        }
        Command::Tables { cohort, format, config, out } => {
            let cfg = read_config(config.as_deref())?;
            let is_toml = cohort.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
            let report =
                if is_toml { fixture::read_reference(&cohort, &cfg)? } else { read_cohort_report(&cohort)? };
            let text = match format {
                Format::Md => markdown::render(&report, cfg.primary_sidedness),
                Format::Json => to_json(&report),
            };
            match out {
                Some(path) => write_atomic(&path, text.as_bytes())?,
                None => stdout.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("stdout"), e))?,
            }
            Ok(EXIT_OK)
        }
        Command::Roundtrip { profile, config, seed, out } => {
            let mut profile = read_profile(profile.as_deref())?;
            if let Some(s) = seed {
                profile.seed = s;
            }
            let cfg = read_config(config.as_deref())?;
            let (report, _) = roundtrip::round_trip_report(&profile, &cfg)?;
            stdout
                .write_all(roundtrip::render(&report).as_bytes())
                .map_err(|e| io_err(Path::new("stdout"), e))?;
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            Ok(if report.pass() { EXIT_OK } else { EXIT_TOLERANCE })
        }
    }
}
