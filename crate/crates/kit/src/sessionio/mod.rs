//! File formats: sensor streams, manifests, configuration, profiles and reports.

pub mod markdown;
pub mod plot;
pub mod report;
pub mod stream;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use shoulder_core::session::{SessionData, SessionManifest, SCHEMA_VERSION};
use shoulder_core::synth::MotionProfile;
use shoulder_core::{AnalysisConfig, Stage};

pub use stream::{format_value, parse_stream, read_stream, stream_to_string, HEADER};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error("{path}{}: {invariant}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Validation { path: String, line: Option<u64>, invariant: String },
    #[error("session has no streams; nothing written")]
    EmptySession,
    #[error("group {0} has no sessions")]
    EmptyGroup(String),
}

impl IoError {
    /// Pipeline stage a failure belongs to.
    pub fn stage(&self) -> Stage {
        match self {
            IoError::EmptyGroup(_) => Stage::Stats,
            _ => Stage::Io,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.display().to_string(), source }
    }

    fn invalid(path: &Path, invariant: impl Into<String>) -> Self {
        IoError::Validation { path: path.display().to_string(), line: None, invariant: invariant.into() }
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

/// Writes through a temporary file in the same directory, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| IoError::io(parent, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> IoError {
    let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1);
    IoError::Parse { path: path.display().to_string(), line, message: e.message().to_string() }
}

fn from_toml<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, IoError> {
    toml::from_str(text).map_err(|e| toml_error(path, text, e))
}

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("in-memory values serialize to TOML")
}

fn check_schema(path: &Path, found: u32) -> Result<(), IoError> {
    if found != SCHEMA_VERSION {
        return Err(IoError::invalid(
            path,
            format!("unsupported schema_version {found} (expected {SCHEMA_VERSION})"),
        ));
    }
    Ok(())
}

pub fn parse_config(text: &str, path: &Path) -> Result<AnalysisConfig, IoError> {
    let cfg: AnalysisConfig = from_toml(path, text)?;
    check_schema(path, cfg.schema_version)?;
    cfg.fusion.validate().map_err(|e| IoError::invalid(path, format!("fusion: {e}")))?;
    Ok(cfg)
}

/// Analysis configuration; the defaults when `path` is `None`.
pub fn read_config(path: Option<&Path>) -> Result<AnalysisConfig, IoError> {
    match path {
        Some(p) => parse_config(&read_text(p)?, p),
        None => Ok(AnalysisConfig::default()),
    }
}

pub fn config_to_toml(cfg: &AnalysisConfig) -> String {
    to_toml(cfg)
}

/// SHA-256 of the canonical TOML form, so equivalent files hash alike.
pub fn config_hash(cfg: &AnalysisConfig) -> String {
    sha256_hex(config_to_toml(cfg).as_bytes())
}

/// A synthesis profile: the `MotionProfile` fields plus `schema_version`.
pub fn parse_profile(text: &str, path: &Path) -> Result<MotionProfile, IoError> {
    let mut table: toml::Table = from_toml(path, text)?;
    let version = match table.remove("schema_version") {
        None => return Err(IoError::invalid(path, "missing schema_version")),
        Some(toml::Value::Integer(v)) => u32::try_from(v).unwrap_or(u32::MAX),
        Some(_) => return Err(IoError::invalid(path, "schema_version must be an integer")),
    };
    check_schema(path, version)?;
    let profile: MotionProfile = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| IoError::Parse {
            path: path.display().to_string(),
            line: 1,
            message: e.message().to_string(),
        })?;
    profile.validate().map_err(|e| IoError::invalid(path, e.to_string()))?;
    Ok(profile)
}

pub fn read_profile(path: Option<&Path>) -> Result<MotionProfile, IoError> {
    match path {
        Some(p) => parse_profile(&read_text(p)?, p),
        None => Ok(MotionProfile::default()),
    }
}

pub fn profile_to_toml(profile: &MotionProfile) -> String {
    let body = toml::to_string(profile).expect("profiles serialize to TOML");
    format!("schema_version = {SCHEMA_VERSION}\n{body}")
}

pub fn manifest_to_toml(m: &SessionManifest) -> String {
    to_toml(m)
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<SessionManifest, IoError> {
    let m: SessionManifest = from_toml(path, text)?;
    m.validate().map_err(|e| IoError::invalid(path, e.to_string()))?;
    for name in m.streams.values() {
        if !is_plain_name(name) {
            return Err(IoError::invalid(path, format!("stream file {name:?} must be a plain file name")));
        }
    }
    Ok(m)
}

fn is_plain_name(name: &str) -> bool {
    let p = Path::new(name);
    !name.is_empty() && p.file_name().is_some_and(|f| f == p.as_os_str()) && name != "." && name != ".."
}

/// Reads `dir/manifest.toml` and every stream it lists.
pub fn read_session(dir: &Path) -> Result<SessionData, IoError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = parse_manifest(&read_text(&manifest_path)?, &manifest_path)?;
    let mut streams = BTreeMap::new();
    for (&site, name) in &manifest.streams {
        streams.insert(site, read_stream(&dir.join(name))?);
    }
    manifest
        .validate_streams(&streams)
        .map_err(|e| IoError::invalid(&manifest_path, e.to_string()))?;
    Ok(SessionData { manifest, streams })
}

/// The files of a session, keyed by name.
pub fn session_files(data: &SessionData) -> Result<BTreeMap<String, String>, IoError> {
    let m = &data.manifest;
    let here = Path::new(MANIFEST_FILE);
    if data.streams.is_empty() || data.streams.values().all(Vec::is_empty) {
        return Err(IoError::EmptySession);
    }
    m.validate_streams(&data.streams).map_err(|e| IoError::invalid(here, e.to_string()))?;
    let mut files = BTreeMap::new();
    for (site, samples) in &data.streams {
        let name = m
            .streams
            .get(site)
            .ok_or_else(|| IoError::invalid(here, format!("no file name for the {site} stream")))?;
        if !is_plain_name(name) || name == MANIFEST_FILE {
            return Err(IoError::invalid(here, format!("stream file {name:?} must be a plain file name")));
        }
        if files.insert(name.clone(), stream_to_string(samples)).is_some() {
            return Err(IoError::invalid(here, format!("stream file {name:?} used twice")));
        }
    }
    files.insert(MANIFEST_FILE.to_string(), manifest_to_toml(m));
    Ok(files)
}

/// Writes a session directory. Everything is staged in a sibling temporary
/// directory first; on any error nothing appears at `dir`.
pub fn write_session(data: &SessionData, dir: &Path) -> Result<(), IoError> {
    let files = session_files(data)?;
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| IoError::io(&parent, e))?;
    if dir.exists() {
        let is_session = dir.join(MANIFEST_FILE).is_file();
        let is_empty = fs::read_dir(dir).map_err(|e| IoError::io(dir, e))?.next().is_none();
        if !is_session && !is_empty {
            return Err(IoError::invalid(dir, "refusing to replace a directory that is not a session"));
        }
    }
    let staging = tempfile::Builder::new()
        .prefix(".session-")
        .tempdir_in(&parent)
        .map_err(|e| IoError::io(&parent, e))?;
    for (name, text) in &files {
        let p = staging.path().join(name);
        fs::write(&p, text).map_err(|e| IoError::io(&p, e))?;
    }
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, dir).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        IoError::io(dir, e)
    })?;
    Ok(())
}
